#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cellplan/placement.hpp"
#include "cellplan/ple.hpp"
#include "cellplan/propagation.hpp"
#include "cellplan/scene.hpp"
#include "cellplan/ue.hpp"

namespace cellplan {

// All writers emit fixed 6-decimal floats so reruns are byte-comparable.

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline void write_coverage_csv(std::ostream& out, const CoverageMap& map,
                               const CellMask& mask) {
  if (!(map.grid == mask.grid)) throw GridMismatchError("coverage map and mask grids differ");
  out << "i,j,x_center,y_center,path_loss_db,rx_power_dbm,state\n";
  for (std::size_t j = 0; j < map.grid.height; ++j) {
    for (std::size_t i = 0; i < map.grid.width; ++i) {
      const std::size_t idx = map.grid.index(i, j);
      const Vec2 c = map.grid.cell_center(i, j);
      out << i << ',' << j << ',' << fixed6(c.x) << ',' << fixed6(c.y) << ',';
      if (!mask.is_outdoor(idx)) {
        out << ",,building\n";
      } else if (!map.reached(idx)) {
        out << ",,unreached\n";
      } else {
        out << fixed6(map.path_loss_db[idx]) << ',' << fixed6(map.rx_power_dbm(idx))
            << ",reached\n";
      }
    }
  }
}

namespace detail {

inline std::uint8_t normalize_byte(double v, double lo, double hi) {
  if (!(hi > lo) || !std::isfinite(v)) return 0;
  const double f = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(f * 255.0));
}

/// P5 binary PGM, row j = height-1 at the top so +y points up in the image.
inline void write_pgm(std::ostream& out, const Grid& grid,
                      const std::vector<std::uint8_t>& pixels) {
  out << "P5\n" << grid.width << " " << grid.height << "\n255\n";
  for (std::size_t row = grid.height; row-- > 0;) {
    out.write(reinterpret_cast<const char*>(&pixels[row * grid.width]),
              static_cast<std::streamsize>(grid.width));
  }
}

}  // namespace detail

/// Received power rendered between floor and ceiling dBm; buildings and unreached
/// cells are black.
inline void write_coverage_pgm(std::ostream& out, const CoverageMap& map, const CellMask& mask,
                               double floor_dbm = -120.0, double ceil_dbm = -40.0) {
  if (!(map.grid == mask.grid)) throw GridMismatchError("coverage map and mask grids differ");
  std::vector<std::uint8_t> px(map.grid.cell_count(), 0);
  for (std::size_t idx = 0; idx < px.size(); ++idx) {
    if (mask.is_outdoor(idx) && map.reached(idx)) {
      px[idx] = detail::normalize_byte(map.rx_power_dbm(idx), floor_dbm, ceil_dbm);
    }
  }
  detail::write_pgm(out, map.grid, px);
}

inline void write_ple_heatmap_csv(std::ostream& out, const PleHeatmap& heatmap) {
  out << "x,y,gamma,status\n";
  for (const PleCell& c : heatmap.cells) {
    out << fixed6(c.position.x) << ',' << fixed6(c.position.y) << ',';
    switch (c.status) {
      case PleStatus::kOk:
        out << fixed6(c.gamma) << ",ok\n";
        break;
      case PleStatus::kInsufficientData:
        out << ",insufficient_data\n";
        break;
      case PleStatus::kInsideBuilding:
        out << ",inside_building\n";
        break;
    }
  }
}

/// Gamma rendered over [2.0, 4.5]; candidates without a fit are black.
inline void write_ple_heatmap_pgm(std::ostream& out, const PleHeatmap& heatmap,
                                  const Grid& grid, double gamma_lo = 2.0,
                                  double gamma_hi = 4.5) {
  std::vector<std::uint8_t> px(grid.cell_count(), 0);
  for (const PleCell& c : heatmap.cells) {
    if (c.status != PleStatus::kOk) continue;
    const auto [i, j] = grid.cell_of(c.position);
    px[grid.index(i, j)] = detail::normalize_byte(c.gamma, gamma_lo, gamma_hi);
  }
  detail::write_pgm(out, grid, px);
}

inline void write_ratio_curve_csv(std::ostream& out, const PlacementSolution& solution) {
  out << "n,coverage_ratio\n";
  for (std::size_t n = 0; n < solution.ratio_curve.size(); ++n) {
    out << (n + 1) << ',' << fixed6(solution.ratio_curve[n]) << '\n';
  }
}

/// Mirror of the paper-style overlap/blind visualization: buildings black, blind
/// cells dark, uncovered outdoor dim, single coverage gray, overlap light.
inline void write_overlay_pgm(std::ostream& out, std::span<const CoverageSet> sets,
                              const CoverageSet& reference, const CellMask& mask) {
  const std::size_t ncells = mask.grid.cell_count();
  std::vector<std::uint8_t> px(ncells, 0);
  std::vector<std::uint8_t> times(ncells, 0);
  for (const CoverageSet& s : sets) {
    if (!(s.grid == mask.grid)) throw GridMismatchError("coverage set grid differs from mask");
    for (std::size_t idx = 0; idx < ncells; ++idx) {
      if (s.covered.test(idx) && times[idx] < 255) ++times[idx];
    }
  }
  for (std::size_t idx = 0; idx < ncells; ++idx) {
    if (!mask.is_outdoor(idx)) {
      px[idx] = 0;
    } else if (times[idx] >= 2) {
      px[idx] = 224;
    } else if (times[idx] == 1) {
      px[idx] = 160;
    } else if (reference.covered.test(idx)) {
      px[idx] = 48;  // blind: macro had it, the network does not
    } else {
      px[idx] = 96;
    }
  }
  detail::write_pgm(out, mask.grid, px);
}

inline void write_ue_samples_csv(std::ostream& out, std::span<const UeSample> samples) {
  out << "x,y,station,required_tx_dbm,feasible\n";
  for (const UeSample& s : samples) {
    out << fixed6(s.position.x) << ',' << fixed6(s.position.y) << ',';
    if (s.serving_station) {
      out << *s.serving_station;
    }
    out << ',' << fixed6(s.required_tx_dbm) << ',' << (s.feasible ? 1 : 0) << '\n';
  }
}

/// Two-column empirical CDF over the feasible samples.
inline void write_cdf_csv(std::ostream& out, const TxPowerStats& stats) {
  out << "required_tx_dbm,cdf\n";
  const double n = static_cast<double>(stats.cdf.size());
  for (std::size_t k = 0; k < stats.cdf.size(); ++k) {
    out << fixed6(stats.cdf[k]) << ',' << fixed6(static_cast<double>(k + 1) / n) << '\n';
  }
}

inline void write_power_sweep_csv(std::ostream& out, std::span<const int> ns,
                                  std::span<const double> net_ratios) {
  out << "n,net_ratio\n";
  for (std::size_t k = 0; k < ns.size(); ++k) {
    out << ns[k] << ',' << fixed6(net_ratios[k]) << '\n';
  }
}

inline void write_samples_csv(std::ostream& out, std::span<const PathLossSample> samples) {
  out << "distance_m,path_loss_db\n";
  for (const PathLossSample& s : samples) {
    out << fixed6(s.distance_m) << ',' << fixed6(s.path_loss_db) << '\n';
  }
}

}  // namespace cellplan
