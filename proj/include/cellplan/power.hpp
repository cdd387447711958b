#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "cellplan/errors.hpp"

namespace cellplan {

// Analytic densification power models. Everything here is an exact closed form;
// simulation results join these numbers only at the CLI level.

enum class StationClassKind { kMacro, kMicro, kPico, kFemto };

struct StationClass {
  std::string_view name;
  StationClassKind kind;
  double tx_power_dbm;
  double total_power_w;
  std::optional<double> typical_height_m;  // unspecified for micro and pico
};

inline constexpr std::array<StationClass, 4> kStationClasses{{
    {"macro", StationClassKind::kMacro, 47.0, 1000.0, 50.0},
    {"micro", StationClassKind::kMicro, 38.0, 144.0, std::nullopt},
    {"pico", StationClassKind::kPico, 21.0, 14.7, std::nullopt},
    {"femto", StationClassKind::kFemto, 17.0, 10.4, 15.0},
}};

inline const StationClass& station_class(std::string_view name) {
  for (const StationClass& c : kStationClasses) {
    if (c.name == name) return c;
  }
  throw ValidationError("unknown station class: " + std::string(name));
}

struct DensificationParams {
  double gamma = 3.0;          // path-loss exponent
  double s = 0.01;             // interface power as a fraction of the reference TX power
  double base_tx_power_w = 100.0;
  double pa_efficiency = 0.4;  // in (0, 1]
};

/// Single-station-to-densified-network transmit power ratio n^(gamma-2):
/// per-station power scales as n^-gamma while the station count scales as n^2.
inline double tx_power_ratio(int n, double gamma) {
  if (n < 1) throw ValidationError("tx_power_ratio requires n >= 1");
  return std::pow(static_cast<double>(n), gamma - 2.0);
}

/// Net network power base * (n^(2-gamma) + s*n^2): transmit savings against the
/// interface power accumulated across n^2 stations.
inline double net_power_w(int n, const DensificationParams& p) {
  if (n < 1) throw ValidationError("net_power_w requires n >= 1");
  const double nd = static_cast<double>(n);
  return p.base_tx_power_w * (std::pow(nd, 2.0 - p.gamma) + p.s * nd * nd);
}

struct DensificationOptimum {
  int n_star = 1;
  double power_w = 0.0;
  std::optional<double> continuous_n_star;  // ((gamma-2)/(2s))^(1/gamma)
  std::optional<int> crossover_n;           // first n with net(n) > net(1)
};

/// Integer argmin of net_power_w over [1, n_max]; ties go to the smaller n.
/// The continuous stationary point and the >1 net-ratio crossover are reported
/// alongside as cross-checks.
inline DensificationOptimum optimal_densification(const DensificationParams& p, int n_max) {
  if (n_max < 1) throw ValidationError("optimal_densification requires n_max >= 1");
  DensificationOptimum opt;
  opt.n_star = 1;
  opt.power_w = net_power_w(1, p);
  const double reference_w = opt.power_w;
  for (int n = 2; n <= n_max; ++n) {
    const double w = net_power_w(n, p);
    if (w < opt.power_w) {
      opt.n_star = n;
      opt.power_w = w;
    }
    if (!opt.crossover_n && w > reference_w) opt.crossover_n = n;
  }
  if (p.gamma > 2.0 && p.s > 0.0) {
    opt.continuous_n_star = std::pow((p.gamma - 2.0) / (2.0 * p.s), 1.0 / p.gamma);
  }
  return opt;
}

/// PA input power for a required output power at a given efficiency.
inline double pa_input_power_w(double tx_out_w, double efficiency) {
  if (!(tx_out_w > 0.0)) throw ValidationError("pa_input_power_w requires tx_out_w > 0");
  if (!(efficiency > 0.0) || efficiency > 1.0) {
    throw ValidationError("pa_input_power_w requires efficiency in (0, 1]");
  }
  return tx_out_w / efficiency;
}

inline double network_total_power_w(const StationClass& cls, std::size_t count) {
  return static_cast<double>(count) * cls.total_power_w;
}

inline double dbm_to_watts(double p_dbm) { return std::pow(10.0, (p_dbm - 30.0) / 10.0); }

inline double watts_to_dbm(double p_w) {
  if (!(p_w > 0.0)) throw ValidationError("watts_to_dbm requires p_w > 0");
  return 10.0 * std::log10(p_w) + 30.0;
}

}  // namespace cellplan
