#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cellplan/errors.hpp"
#include "cellplan/parallel.hpp"
#include "cellplan/propagation.hpp"
#include "cellplan/scene.hpp"

namespace cellplan {

struct PathLossSample {
  double distance_m = 0.0;
  double path_loss_db = 0.0;
};

struct PathLossFit {
  double k_db = 0.0;    // intercept: loss at 1 m
  double gamma = 0.0;   // path-loss exponent
  double rmse_db = 0.0;
  std::size_t sample_count = 0;
};

/// Ordinary least squares for PL = K_dB + 10*gamma*log10(d) over the samples.
/// Closed-form solve on centered sums; no iterative optimizer.
inline PathLossFit fit_ple(std::span<const PathLossSample> samples) {
  if (samples.size() < 2) {
    throw ValidationError("fit_ple needs at least 2 samples, got " +
                          std::to_string(samples.size()));
  }
  const std::size_t n = samples.size();
  double x_sum = 0.0, y_sum = 0.0;
  for (const PathLossSample& s : samples) {
    if (!(s.distance_m > 0.0)) throw ValidationError("fit_ple: sample distance must be > 0");
    x_sum += std::log10(s.distance_m);
    y_sum += s.path_loss_db;
  }
  const double x_mean = x_sum / static_cast<double>(n);
  const double y_mean = y_sum / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (const PathLossSample& s : samples) {
    const double dx = std::log10(s.distance_m) - x_mean;
    sxx += dx * dx;
    sxy += dx * (s.path_loss_db - y_mean);
  }
  if (sxx <= 0.0) {
    throw ValidationError("fit_ple: all sample distances are equal (rank-deficient fit)");
  }
  const double slope = sxy / sxx;  // = 10 * gamma
  PathLossFit fit;
  fit.gamma = slope / 10.0;
  fit.k_db = y_mean - slope * x_mean;
  fit.sample_count = n;
  double ss_res = 0.0;
  for (const PathLossSample& s : samples) {
    const double r = s.path_loss_db - (fit.k_db + slope * std::log10(s.distance_m));
    ss_res += r * r;
  }
  fit.rmse_db = std::sqrt(ss_res / static_cast<double>(n));
  return fit;
}

/// One sample per reached outdoor cell whose 2D distance to the transmitter lies
/// in [min_distance_m, max_radius_m]. The recorded distance is the 3D distance to
/// the cell center at receiver height. Unreached cells contribute nothing.
inline std::vector<PathLossSample> samples_from_coverage(const CoverageMap& map,
                                                         const CellMask& mask,
                                                         double max_radius_m,
                                                         double min_distance_m = 10.0) {
  if (!(map.grid == mask.grid)) throw GridMismatchError("coverage map and mask grids differ");
  std::vector<PathLossSample> samples;
  const double dz = map.tx.height_m - map.grid.receiver_height_m;
  for (std::size_t idx = 0; idx < map.path_loss_db.size(); ++idx) {
    if (!mask.is_outdoor(idx) || !map.reached(idx)) continue;
    const Vec2 c = map.grid.cell_center(idx);
    const double d2 = distance(c, map.tx.position);
    if (d2 < min_distance_m || d2 > max_radius_m) continue;
    samples.push_back({std::sqrt(d2 * d2 + dz * dz), map.path_loss_db[idx]});
  }
  return samples;
}

enum class PleStatus : std::uint8_t { kOk, kInsufficientData, kInsideBuilding };

struct PleCell {
  Vec2 position;
  PleStatus status = PleStatus::kInsufficientData;
  double gamma = std::numeric_limits<double>::quiet_NaN();
};

struct PleHeatmap {
  std::vector<PleCell> cells;
  double max_radius_m = 0.0;
  std::size_t min_samples = 30;
};

/// Fits gamma per candidate transmitter location. Candidates inside a building
/// footprint are marked rather than computed; candidates with fewer than
/// min_samples usable cells are marked insufficient. Parallel across candidates,
/// schedule-independent.
inline PleHeatmap ple_heatmap(const Scene& scene, const CellMask& mask,
                              std::span<const Vec2> candidates, const Transmitter& tx_template,
                              const RayTracerConfig& cfg, double max_radius_m,
                              std::size_t min_samples = 30, double min_distance_m = 10.0,
                              unsigned threads = 0) {
  if (candidates.empty()) throw ValidationError("ple_heatmap: candidate list is empty");
  for (const Vec2& c : candidates) {
    if (!scene.bounds.contains(c)) {
      throw ValidationError("ple_heatmap: candidate lies outside scene bounds");
    }
  }
  PleHeatmap heatmap;
  heatmap.max_radius_m = max_radius_m;
  heatmap.min_samples = min_samples;
  heatmap.cells.resize(candidates.size());

  parallel_chunks(candidates.size(), threads, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      PleCell& cell = heatmap.cells[k];
      cell.position = candidates[k];
      bool inside = false;
      for (const Building& b : scene.buildings) {
        if (point_in_polygon(candidates[k], b.footprint)) {
          inside = true;
          break;
        }
      }
      if (inside) {
        cell.status = PleStatus::kInsideBuilding;
        continue;
      }
      Transmitter tx = tx_template;
      tx.position = candidates[k];
      const CoverageMap map = compute_coverage_map(scene, mask, tx, cfg, 1);
      const auto samples = samples_from_coverage(map, mask, max_radius_m, min_distance_m);
      if (samples.size() < std::max<std::size_t>(min_samples, 2)) {
        cell.status = PleStatus::kInsufficientData;
        continue;
      }
      double d_min = samples.front().distance_m, d_max = samples.front().distance_m;
      for (const auto& s : samples) {
        d_min = std::min(d_min, s.distance_m);
        d_max = std::max(d_max, s.distance_m);
      }
      if (d_max - d_min <= 1e-9) {
        cell.status = PleStatus::kInsufficientData;
        continue;
      }
      cell.gamma = fit_ple(samples).gamma;
      cell.status = PleStatus::kOk;
    }
  });
  return heatmap;
}

inline PleHeatmap ple_heatmap(const Scene& scene, const GridSpec& spec,
                              std::span<const Vec2> candidates, const Transmitter& tx_template,
                              const RayTracerConfig& cfg, double max_radius_m,
                              std::size_t min_samples = 30, double min_distance_m = 10.0,
                              unsigned threads = 0) {
  return ple_heatmap(scene, rasterize(scene, spec), candidates, tx_template, cfg, max_radius_m,
                     min_samples, min_distance_m, threads);
}

}  // namespace cellplan
