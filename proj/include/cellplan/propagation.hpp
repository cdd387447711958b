#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <thread>
#include <vector>

#include "cellplan/bitset.hpp"
#include "cellplan/errors.hpp"
#include "cellplan/geometry.hpp"
#include "cellplan/parallel.hpp"
#include "cellplan/rng.hpp"
#include "cellplan/scene.hpp"

namespace cellplan {

struct Transmitter {
  Vec2 position;
  double height_m = 15.0;
  double tx_power_dbm = 17.0;
  double frequency_hz = 3.5e9;
};

struct RayTracerConfig {
  std::size_t num_samples = 1'000'000;
  int max_depth = 25;
  double reflection_loss_db = 6.0;  // per specular bounce
  double max_range_m = 2000.0;
  std::uint64_t seed = 1;
  bool stratified = true;
  bool analytic_direct = true;  // direct component solved per cell instead of sampled
};

/// Friis free-space loss in dB for isotropic antennas.
inline double free_space_path_loss_db(double d_m, double f_hz) {
  if (!(d_m > 0.0) || !(f_hz > 0.0)) {
    throw ValidationError("free_space_path_loss_db requires d_m > 0 and f_hz > 0");
  }
  return 20.0 * std::log10(d_m) + 20.0 * std::log10(f_hz) - 147.55;
}

inline constexpr double kUnreachedPathLossDb = std::numeric_limits<double>::infinity();

/// Per-cell best-path loss of one transmitter. Building cells and cells no path
/// reaches hold +inf.
struct CoverageMap {
  Grid grid;
  Transmitter tx;
  std::vector<double> path_loss_db;

  bool reached(std::size_t idx) const { return path_loss_db[idx] != kUnreachedPathLossDb; }
  double rx_power_dbm(std::size_t idx) const { return tx.tx_power_dbm - path_loss_db[idx]; }
};

struct CoverageSet {
  Grid grid;
  double threshold_dbm = -90.0;
  CellBitset covered;
};

namespace detail {

struct Wall {
  Vec2 a, b;
  Vec2 edge_unit;
  std::size_t id = 0;
};

struct BuildingBbox {
  double x_min, y_min, x_max, y_max;
};

inline BuildingBbox building_bbox(const Building& b) {
  BuildingBbox box{b.footprint[0].x, b.footprint[0].y, b.footprint[0].x, b.footprint[0].y};
  for (const Vec2& v : b.footprint) {
    box.x_min = std::min(box.x_min, v.x);
    box.y_min = std::min(box.y_min, v.y);
    box.x_max = std::max(box.x_max, v.x);
    box.y_max = std::max(box.y_max, v.y);
  }
  return box;
}

inline bool segment_misses_bbox(Vec2 p0, Vec2 p1, const BuildingBbox& box) {
  return std::max(p0.x, p1.x) < box.x_min || std::min(p0.x, p1.x) > box.x_max ||
         std::max(p0.y, p1.y) < box.y_min || std::min(p0.y, p1.y) > box.y_max;
}

/// Walks every cell the segment p0->p1 crosses (Amanatides-Woo traversal) and
/// reports the entry parameter t in [0,1]. Exact gridline ties step x before y.
template <typename Visitor>
inline void for_each_cell_on_segment(const Grid& grid, Vec2 p0, Vec2 p1, Visitor&& visit) {
  const double x_lo = grid.x_min;
  const double y_lo = grid.y_min;
  const double x_hi = grid.x_min + static_cast<double>(grid.width) * grid.cell_size_m;
  const double y_hi = grid.y_min + static_cast<double>(grid.height) * grid.cell_size_m;
  const Vec2 d = p1 - p0;

  // Liang-Barsky clip to the grid rectangle.
  double t0 = 0.0, t1 = 1.0;
  auto clip = [&](double p, double q) {
    if (p == 0.0) return q >= 0.0;
    const double t = q / p;
    if (p < 0.0) {
      if (t > t1) return false;
      if (t > t0) t0 = t;
    } else {
      if (t < t0) return false;
      if (t < t1) t1 = t;
    }
    return true;
  };
  if (!clip(-d.x, p0.x - x_lo)) return;
  if (!clip(d.x, x_hi - p0.x)) return;
  if (!clip(-d.y, p0.y - y_lo)) return;
  if (!clip(d.y, y_hi - p0.y)) return;
  if (t0 > t1) return;

  const Vec2 start = p0 + t0 * d;
  auto [i, j] = grid.cell_of(start);
  std::ptrdiff_t ci = static_cast<std::ptrdiff_t>(i);
  std::ptrdiff_t cj = static_cast<std::ptrdiff_t>(j);
  const std::ptrdiff_t step_x = d.x > 0.0 ? 1 : (d.x < 0.0 ? -1 : 0);
  const std::ptrdiff_t step_y = d.y > 0.0 ? 1 : (d.y < 0.0 ? -1 : 0);

  const double inf = std::numeric_limits<double>::infinity();
  auto boundary_t = [&](double coord0, double dcoord, double lo, double cell,
                        std::ptrdiff_t c, std::ptrdiff_t step) {
    if (step == 0) return inf;
    const double boundary = lo + static_cast<double>(step > 0 ? c + 1 : c) * cell;
    return (boundary - coord0) / dcoord;
  };
  double t_max_x = boundary_t(p0.x, d.x, x_lo, grid.cell_size_m, ci, step_x);
  double t_max_y = boundary_t(p0.y, d.y, y_lo, grid.cell_size_m, cj, step_y);
  const double t_delta_x = step_x != 0 ? grid.cell_size_m / std::abs(d.x) : inf;
  const double t_delta_y = step_y != 0 ? grid.cell_size_m / std::abs(d.y) : inf;

  double t_entry = t0;
  for (;;) {
    visit(static_cast<std::size_t>(ci), static_cast<std::size_t>(cj), t_entry);
    if (t_max_x <= t_max_y) {
      if (t_max_x > t1) return;
      t_entry = t_max_x;
      ci += step_x;
      if (ci < 0 || ci >= static_cast<std::ptrdiff_t>(grid.width)) return;
      t_max_x += t_delta_x;
    } else {
      if (t_max_y > t1) return;
      t_entry = t_max_y;
      cj += step_y;
      if (cj < 0 || cj >= static_cast<std::ptrdiff_t>(grid.height)) return;
      t_max_y += t_delta_y;
    }
  }
}

/// Exit distance of a ray from the grid rectangle (origin assumed inside).
inline double grid_exit_distance(const Grid& grid, Vec2 origin, Vec2 dir) {
  const double x_hi = grid.x_min + static_cast<double>(grid.width) * grid.cell_size_m;
  const double y_hi = grid.y_min + static_cast<double>(grid.height) * grid.cell_size_m;
  const double inf = std::numeric_limits<double>::infinity();
  double t = inf;
  if (dir.x > 0.0) t = std::min(t, (x_hi - origin.x) / dir.x);
  if (dir.x < 0.0) t = std::min(t, (grid.x_min - origin.x) / dir.x);
  if (dir.y > 0.0) t = std::min(t, (y_hi - origin.y) / dir.y);
  if (dir.y < 0.0) t = std::min(t, (grid.y_min - origin.y) / dir.y);
  return std::max(t, 0.0);
}

}  // namespace detail

/// Computes the per-transmitter coverage map.
///
/// Direct component: each outdoor cell with an unobstructed 3D sight line gets the
/// Friis loss at the 3D distance. A building obstructs the sight line iff its
/// footprint crosses the 2D segment and its height exceeds the line's interpolated
/// height at some crossing point.
///
/// Reflected component: `num_samples` azimuth rays fly horizontally at the
/// transmitter height; walls at least that tall reflect them specularly (with a
/// fixed per-bounce loss), shorter buildings are transparent. Every outdoor cell a
/// segment crosses receives a candidate loss computed at the unfolded 3D distance
/// to the segment's entry point into the cell.
///
/// Per cell the minimum candidate wins, clamped from below by the Friis loss at the
/// cell-center distance so no cell ever beats line-of-sight physics. Output is
/// bit-identical for any thread count: ray randomness is counter-based on
/// (seed, ray index) and candidates merge through an order-free min.
inline CoverageMap compute_coverage_map(const Scene& scene, const CellMask& mask,
                                        const Transmitter& tx, const RayTracerConfig& cfg,
                                        unsigned threads = 0) {
  if (!scene.bounds.contains(tx.position)) {
    throw ValidationError("transmitter position lies outside scene bounds");
  }
  if (!(tx.height_m > 0.0)) throw ValidationError("transmitter height_m must be > 0");
  if (!(tx.frequency_hz > 0.0)) throw ValidationError("transmitter frequency_hz must be > 0");
  if (cfg.num_samples < 1) throw ValidationError("num_samples must be >= 1");
  if (cfg.max_depth < 0) throw ValidationError("max_depth must be >= 0");
  if (cfg.reflection_loss_db < 0.0) throw ValidationError("reflection_loss_db must be >= 0");
  if (!(cfg.max_range_m > 0.0)) throw ValidationError("max_range_m must be > 0");

  const Grid& grid = mask.grid;
  const std::size_t ncells = grid.cell_count();
  const double dz = tx.height_m - grid.receiver_height_m;
  const double dz2 = dz * dz;

  auto los_floor_db = [&](std::size_t idx) {
    const Vec2 c = grid.cell_center(idx);
    const double d3 = std::sqrt(dot(c - tx.position, c - tx.position) + dz2);
    return d3 > 0.0 ? free_space_path_loss_db(d3, tx.frequency_hz)
                    : -std::numeric_limits<double>::infinity();
  };

  std::vector<double> best(ncells, kUnreachedPathLossDb);

  std::vector<detail::BuildingBbox> boxes;
  boxes.reserve(scene.buildings.size());
  for (const Building& b : scene.buildings) boxes.push_back(detail::building_bbox(b));

  if (cfg.analytic_direct) {
    parallel_chunks(ncells, threads, 1024, [&](std::size_t begin, std::size_t end) {
      std::vector<double> ts;
      for (std::size_t idx = begin; idx < end; ++idx) {
        if (!mask.is_outdoor(idx)) continue;
        const Vec2 center = grid.cell_center(idx);
        bool blocked = false;
        for (std::size_t b = 0; b < scene.buildings.size() && !blocked; ++b) {
          if (detail::segment_misses_bbox(tx.position, center, boxes[b])) continue;
          const Building& building = scene.buildings[b];
          ts.clear();
          segment_polygon_crossings(tx.position, center, building.footprint, ts);
          if (point_in_polygon(tx.position, building.footprint)) ts.push_back(0.0);
          if (ts.empty()) continue;
          double h_min = std::numeric_limits<double>::infinity();
          for (const double t : ts) {
            h_min = std::min(h_min, tx.height_m + t * (grid.receiver_height_m - tx.height_m));
          }
          blocked = building.height_m > h_min;
        }
        if (!blocked) best[idx] = los_floor_db(idx);
      }
    });
  }

  // Reflective walls: only buildings at least as tall as the transmitter interact
  // with launched rays.
  std::vector<detail::Wall> walls;
  for (const Building& b : scene.buildings) {
    if (b.height_m < tx.height_m) continue;
    const std::size_t n = b.footprint.size();
    for (std::size_t e = 0; e < n; ++e) {
      const Vec2 a = b.footprint[e];
      const Vec2 bb = b.footprint[(e + 1) % n];
      walls.push_back({a, bb, normalized(bb - a), walls.size()});
    }
  }

  const double two_pi = 2.0 * std::numbers::pi;
  const double freq_term_db = 20.0 * std::log10(tx.frequency_hz) - 147.55;
  auto trace_ray = [&](std::uint64_t ray, std::vector<double>& sink) {
    const double frac = ray_azimuth_fraction(cfg.seed, ray, cfg.stratified);
    Vec2 dir{std::cos(two_pi * frac), std::sin(two_pi * frac)};
    Vec2 pos = tx.position;
    double traveled = 0.0;
    int bounces = 0;
    std::size_t skip_wall = static_cast<std::size_t>(-1);

    while (traveled < cfg.max_range_m) {
      double t_wall = std::numeric_limits<double>::infinity();
      std::size_t hit_wall = static_cast<std::size_t>(-1);
      for (const detail::Wall& w : walls) {
        if (w.id == skip_wall) continue;
        const auto hit = ray_segment_intersection(pos, dir, w.a, w.b, 1e-9);
        if (hit && hit->t < t_wall) {
          t_wall = hit->t;
          hit_wall = w.id;
        }
      }
      const double t_exit = detail::grid_exit_distance(grid, pos, dir);
      const double t_left = cfg.max_range_m - traveled;
      const bool reflects = t_wall <= std::min(t_exit, t_left);
      const double t_end = reflects ? t_wall : std::min(t_exit, t_left);
      if (t_end <= 0.0) break;

      const Vec2 seg_end = pos + t_end * dir;
      const double base = traveled;
      const double bounce_loss = static_cast<double>(bounces) * cfg.reflection_loss_db;
      detail::for_each_cell_on_segment(
          grid, pos, seg_end, [&](std::size_t i, std::size_t j, double t_entry) {
            const std::size_t idx = grid.index(i, j);
            if (!mask.is_outdoor(idx)) return;
            const double along = base + t_entry * t_end;
            const double d3sq = along * along + dz2;
            if (d3sq <= 0.0) return;
            const double pl =
                20.0 * std::log10(std::sqrt(d3sq)) + freq_term_db + bounce_loss;
            if (pl < sink[idx]) sink[idx] = pl;
          });

      if (!reflects) break;
      traveled += t_wall;
      if (bounces >= cfg.max_depth) break;
      ++bounces;
      pos = pos + t_wall * dir;
      dir = reflect_direction(dir, walls[hit_wall].edge_unit);
      skip_wall = hit_wall;
    }
  };

  const std::size_t chunk = 4096;
  const std::size_t num_chunks = (cfg.num_samples + chunk - 1) / chunk;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(
      effective_threads(threads), num_chunks));
  if (workers <= 1) {
    std::vector<double> sink(ncells, kUnreachedPathLossDb);
    for (std::uint64_t ray = 0; ray < cfg.num_samples; ++ray) trace_ray(ray, sink);
    for (std::size_t idx = 0; idx < ncells; ++idx) best[idx] = std::min(best[idx], sink[idx]);
  } else {
    std::vector<std::vector<double>> sinks(workers,
                                           std::vector<double>(ncells, kUnreachedPathLossDb));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (;;) {
          const std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
          if (c >= num_chunks) return;
          const std::uint64_t begin = c * chunk;
          const std::uint64_t end = std::min<std::uint64_t>(begin + chunk, cfg.num_samples);
          for (std::uint64_t ray = begin; ray < end; ++ray) trace_ray(ray, sinks[w]);
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& sink : sinks) {
      for (std::size_t idx = 0; idx < ncells; ++idx) best[idx] = std::min(best[idx], sink[idx]);
    }
  }

  // LOS floor: no candidate may undercut free space at the cell-center distance
  // (ray deposits use entry points, which can sit slightly nearer than the center).
  for (std::size_t idx = 0; idx < ncells; ++idx) {
    if (!mask.is_outdoor(idx)) {
      best[idx] = kUnreachedPathLossDb;
    } else if (best[idx] != kUnreachedPathLossDb) {
      best[idx] = std::max(best[idx], los_floor_db(idx));
    }
  }

  return CoverageMap{grid, tx, std::move(best)};
}

inline CoverageMap compute_coverage_map(const Scene& scene, const GridSpec& spec,
                                        const Transmitter& tx, const RayTracerConfig& cfg,
                                        unsigned threads = 0) {
  return compute_coverage_map(scene, rasterize(scene, spec), tx, cfg, threads);
}

/// covered(cell) <=> cell is outdoor and rx power meets the threshold.
inline CoverageSet coverage_set(const CoverageMap& map, const CellMask& mask,
                                double threshold_dbm) {
  if (!(map.grid == mask.grid)) throw GridMismatchError("coverage map and mask grids differ");
  CoverageSet set{map.grid, threshold_dbm, CellBitset(map.grid.cell_count())};
  for (std::size_t idx = 0; idx < map.path_loss_db.size(); ++idx) {
    if (mask.is_outdoor(idx) && map.reached(idx) && map.rx_power_dbm(idx) >= threshold_dbm) {
      set.covered.set(idx);
    }
  }
  return set;
}

/// Fraction of outdoor cells covered by at least one set. Empty list -> 0.
inline double coverage_ratio(std::span<const CoverageSet> sets, const CellMask& mask) {
  if (mask.outdoor_count == 0) {
    throw ValidationError("coverage_ratio: scene has no outdoor cells");
  }
  if (sets.empty()) return 0.0;
  CellBitset all(mask.grid.cell_count());
  for (const CoverageSet& s : sets) {
    if (!(s.grid == mask.grid)) throw GridMismatchError("coverage set grid differs from mask");
    all |= s.covered;
  }
  return static_cast<double>(all.count()) / static_cast<double>(mask.outdoor_count);
}

struct OverlapBlind {
  double overlap_ratio = 0.0;  // outdoor cells covered by >= 2 sets
  double blind_ratio = 0.0;    // outdoor cells the reference covers but no set does
};

inline OverlapBlind overlap_and_blind(std::span<const CoverageSet> sets,
                                      const CoverageSet& reference, const CellMask& mask) {
  if (mask.outdoor_count == 0) {
    throw ValidationError("overlap_and_blind: scene has no outdoor cells");
  }
  if (!(reference.grid == mask.grid)) {
    throw GridMismatchError("reference coverage set grid differs from mask");
  }
  const std::size_t ncells = mask.grid.cell_count();
  CellBitset once(ncells), twice(ncells);
  for (const CoverageSet& s : sets) {
    if (!(s.grid == mask.grid)) throw GridMismatchError("coverage set grid differs from mask");
    for (std::size_t idx = 0; idx < ncells; ++idx) {
      if (!s.covered.test(idx)) continue;
      if (once.test(idx)) {
        twice.set(idx);
      } else {
        once.set(idx);
      }
    }
  }
  OverlapBlind result;
  result.overlap_ratio =
      static_cast<double>(twice.count()) / static_cast<double>(mask.outdoor_count);
  result.blind_ratio = static_cast<double>(reference.covered.count_and_not(once)) /
                       static_cast<double>(mask.outdoor_count);
  return result;
}

}  // namespace cellplan
