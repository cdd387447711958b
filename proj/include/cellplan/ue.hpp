#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cellplan/bitset.hpp"
#include "cellplan/errors.hpp"
#include "cellplan/propagation.hpp"
#include "cellplan/rng.hpp"
#include "cellplan/scene.hpp"

namespace cellplan {

struct UeSimConfig {
  std::size_t num_users = 10000;
  double snr_margin_db = 15.0;      // required rx = station sensitivity + margin
  double max_ue_power_dbm = 23.0;   // 3GPP UE power class 3
  std::uint64_t seed = 1;
};

/// One deployed network: the coverage maps of its stations plus the class
/// sensitivity used both as the downlink coverage threshold (green region) and as
/// the uplink receive floor.
struct NetworkDeployment {
  std::vector<CoverageMap> maps;
  double sensitivity_dbm = -90.0;
};

struct UeSample {
  Vec2 position;
  std::optional<std::size_t> serving_station;  // nullopt = uncovered
  double downlink_rx_dbm = -std::numeric_limits<double>::infinity();
  double required_tx_dbm = std::numeric_limits<double>::infinity();
  bool feasible = false;  // required_tx_dbm <= max_ue_power_dbm
};

struct TxPowerStats {
  double mean_dbm = 0.0;
  double median_dbm = 0.0;
  std::array<double, 5> percentiles_dbm{};  // 5 / 25 / 50 / 75 / 95
  std::vector<double> cdf;                  // sorted feasible required powers
  double infeasible_fraction = 0.0;
  std::size_t feasible_count = 0;
  std::size_t total_count = 0;
};

/// Cells covered by at least one station of the deployment at its own threshold.
inline CellBitset green_region(const NetworkDeployment& net, const CellMask& mask) {
  if (net.maps.empty()) throw ValidationError("network deployment has no stations");
  CellBitset green(mask.grid.cell_count());
  for (const CoverageMap& map : net.maps) {
    const CoverageSet set = coverage_set(map, mask, net.sensitivity_dbm);
    green |= set.covered;
  }
  return green;
}

namespace detail {

inline std::vector<Vec2> draw_users_in_cells(const CellBitset& region, const Grid& grid,
                                             std::size_t num_users, std::uint64_t seed) {
  std::vector<std::size_t> cells;
  for (std::size_t idx = 0; idx < region.size(); ++idx) {
    if (region.test(idx)) cells.push_back(idx);
  }
  if (cells.empty()) throw ValidationError("green region is empty; no place to put users");
  Rng rng(seed);
  std::vector<Vec2> users;
  users.reserve(num_users);
  for (std::size_t u = 0; u < num_users; ++u) {
    const std::size_t idx = cells[rng.next_below(cells.size())];
    const Vec2 c = grid.cell_center(idx);
    users.push_back({c.x + (rng.next_unit() - 0.5) * grid.cell_size_m,
                     c.y + (rng.next_unit() - 0.5) * grid.cell_size_m});
  }
  return users;
}

}  // namespace detail

/// num_users positions drawn uniformly over the deployment's green region
/// (uniform cell, then uniform within the cell). Seed-deterministic.
inline std::vector<Vec2> populate_users(const NetworkDeployment& net, const CellMask& mask,
                                        const UeSimConfig& cfg) {
  if (cfg.num_users < 1) throw ValidationError("num_users must be >= 1");
  return detail::draw_users_in_cells(green_region(net, mask), mask.grid, cfg.num_users,
                                     cfg.seed);
}

/// Serving station = argmax downlink rx power at the user's cell (ties to the
/// lower station index). Uplink loss equals the serving downlink loss
/// (reciprocity); required tx = sensitivity + SNR margin + path loss.
inline UeSample required_uplink_power(Vec2 user, const NetworkDeployment& net,
                                      const UeSimConfig& cfg) {
  if (net.maps.empty()) throw ValidationError("network deployment has no stations");
  const Grid& grid = net.maps.front().grid;
  const auto [i, j] = grid.cell_of(user);
  const std::size_t idx = grid.index(i, j);

  UeSample sample;
  sample.position = user;
  for (std::size_t s = 0; s < net.maps.size(); ++s) {
    if (!(net.maps[s].grid == grid)) throw GridMismatchError("network maps on different grids");
    if (!net.maps[s].reached(idx)) continue;
    const double rx = net.maps[s].rx_power_dbm(idx);
    if (!sample.serving_station || rx > sample.downlink_rx_dbm) {
      sample.serving_station = s;
      sample.downlink_rx_dbm = rx;
    }
  }
  if (!sample.serving_station) {
    throw ValidationError("user at cell " + std::to_string(idx) +
                          " is not covered by any station");
  }
  const double path_loss = net.maps[*sample.serving_station].path_loss_db[idx];
  sample.required_tx_dbm = net.sensitivity_dbm + cfg.snr_margin_db + path_loss;
  sample.feasible = sample.required_tx_dbm <= cfg.max_ue_power_dbm;
  return sample;
}

inline TxPowerStats tx_power_stats(const std::vector<UeSample>& samples) {
  TxPowerStats stats;
  stats.total_count = samples.size();
  for (const UeSample& s : samples) {
    if (s.feasible) stats.cdf.push_back(s.required_tx_dbm);
  }
  stats.feasible_count = stats.cdf.size();
  stats.infeasible_fraction =
      samples.empty() ? 0.0
                      : 1.0 - static_cast<double>(stats.feasible_count) /
                                  static_cast<double>(samples.size());
  std::sort(stats.cdf.begin(), stats.cdf.end());
  if (stats.cdf.empty()) {
    stats.mean_dbm = stats.median_dbm = std::numeric_limits<double>::quiet_NaN();
    stats.percentiles_dbm.fill(std::numeric_limits<double>::quiet_NaN());
    return stats;
  }
  double sum = 0.0;
  for (const double v : stats.cdf) sum += v;
  stats.mean_dbm = sum / static_cast<double>(stats.cdf.size());
  auto nearest_rank = [&](double q) {
    const double n = static_cast<double>(stats.cdf.size());
    std::size_t r = static_cast<std::size_t>(std::ceil(q * n));
    if (r == 0) r = 1;
    if (r > stats.cdf.size()) r = stats.cdf.size();
    return stats.cdf[r - 1];
  };
  stats.percentiles_dbm = {nearest_rank(0.05), nearest_rank(0.25), nearest_rank(0.50),
                           nearest_rank(0.75), nearest_rank(0.95)};
  stats.median_dbm = stats.percentiles_dbm[2];
  return stats;
}

struct NetworkComparison {
  TxPowerStats stats_a;
  TxPowerStats stats_b;
  std::vector<UeSample> samples_a;
  std::vector<UeSample> samples_b;
  double mean_delta_db = 0.0;        // mean of (required_a - required_b) over all users
  std::size_t paired_feasible_count = 0;  // users feasible in both networks
};

/// Paired comparison: one user population drawn from the intersection of both
/// green regions is evaluated against each network. Per-network stats and CDFs
/// cover that network's feasible users; the mean delta averages the per-user
/// required-power difference over the whole population (required power is well
/// defined above the UE cap), so capping never biases the comparison and adding
/// stations can never flip the sign.
inline NetworkComparison compare_networks(const NetworkDeployment& net_a,
                                          const NetworkDeployment& net_b, const CellMask& mask,
                                          const UeSimConfig& cfg) {
  CellBitset region = green_region(net_a, mask);
  region &= green_region(net_b, mask);
  if (!region.any()) {
    throw ValidationError("the two networks' green regions do not intersect");
  }
  const std::vector<Vec2> users =
      detail::draw_users_in_cells(region, mask.grid, cfg.num_users, cfg.seed);

  NetworkComparison cmp;
  cmp.samples_a.reserve(users.size());
  cmp.samples_b.reserve(users.size());
  double delta_sum = 0.0;
  for (const Vec2& u : users) {
    const UeSample a = required_uplink_power(u, net_a, cfg);
    const UeSample b = required_uplink_power(u, net_b, cfg);
    delta_sum += a.required_tx_dbm - b.required_tx_dbm;
    if (a.feasible && b.feasible) ++cmp.paired_feasible_count;
    cmp.samples_a.push_back(a);
    cmp.samples_b.push_back(b);
  }
  cmp.stats_a = tx_power_stats(cmp.samples_a);
  cmp.stats_b = tx_power_stats(cmp.samples_b);
  cmp.mean_delta_db = users.empty()
                          ? std::numeric_limits<double>::quiet_NaN()
                          : delta_sum / static_cast<double>(users.size());
  return cmp;
}

}  // namespace cellplan
