#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cellplan/bitset.hpp"
#include "cellplan/errors.hpp"
#include "cellplan/parallel.hpp"
#include "cellplan/propagation.hpp"
#include "cellplan/rng.hpp"
#include "cellplan/scene.hpp"

namespace cellplan {

struct StationTemplate {
  double height_m = 15.0;
  double tx_power_dbm = 17.0;
  double frequency_hz = 3.5e9;

  Transmitter at(Vec2 position) const {
    return Transmitter{position, height_m, tx_power_dbm, frequency_hz};
  }
};

struct PlacementProblem {
  Scene scene;
  CellMask mask;
  StationTemplate station;
  double sensitivity_dbm = -90.0;
  double candidate_spacing_m = 15.0;
  double target_ratio = 0.72;      // final halt target; the caller bakes in any overshoot
  double overshoot_factor = 1.1;   // bookkeeping for reports
  RayTracerConfig tracer;
};

enum class PlacementAlgorithm : std::uint8_t { kGreedy, kHill, kUniform, kBrute };

inline const char* placement_algorithm_name(PlacementAlgorithm a) {
  switch (a) {
    case PlacementAlgorithm::kGreedy: return "greedy";
    case PlacementAlgorithm::kHill: return "hill";
    case PlacementAlgorithm::kUniform: return "uniform";
    case PlacementAlgorithm::kBrute: return "brute";
  }
  return "?";
}

struct PlacementSolution {
  PlacementAlgorithm algorithm = PlacementAlgorithm::kGreedy;
  std::vector<Vec2> sites;
  std::vector<std::size_t> site_indices;  // candidate indices, parallel to sites
  std::vector<double> ratio_curve;        // union coverage after each added site
  double final_ratio = 0.0;
  bool target_reached = false;
  std::size_t evaluations = 0;            // coverage-map computations consumed
  std::vector<double> k_ratios;           // uniform only: coverage of each k x k stage
};

struct Candidate {
  Vec2 position;        // outdoor cell center snapped from the spacing lattice
  std::size_t cell_index = 0;
};

struct CandidateCache {
  std::vector<Candidate> candidates;
  std::vector<CoverageSet> sets;  // one per candidate, same order
  std::size_t maps_computed = 0;
};

struct MacroReference {
  double e_m = 0.0;           // coverage ratio of the reference macro station
  CoverageSet reference;
  CoverageMap map;
};

/// Coverage target of the reference macro cell, evaluated at the macro's own
/// downlink sensitivity.
inline MacroReference macro_reference(const PlacementProblem& problem, const Transmitter& macro,
                                      double macro_sensitivity_dbm, unsigned threads = 0) {
  MacroReference ref;
  ref.map = compute_coverage_map(problem.scene, problem.mask, macro, problem.tracer, threads);
  ref.reference = coverage_set(ref.map, problem.mask, macro_sensitivity_dbm);
  const CoverageSet sets[] = {ref.reference};
  ref.e_m = coverage_ratio(sets, problem.mask);
  return ref;
}

/// Candidate sites: lattice points spaced candidate_spacing_m apart, each snapped
/// to the nearest outdoor cell center within half a spacing (lattice points over
/// buildings move to the adjacent street; deeper ones are dropped). Deduplicated,
/// in row-major cell order (the tie-break order of every algorithm below).
inline std::vector<Candidate> candidate_grid(const CellMask& mask, double spacing_m) {
  if (!(spacing_m > 0.0)) throw ValidationError("candidate_spacing_m must be > 0");
  const Grid& grid = mask.grid;
  const double extent_x = static_cast<double>(grid.width) * grid.cell_size_m;
  const double extent_y = static_cast<double>(grid.height) * grid.cell_size_m;
  const auto nx = static_cast<std::size_t>(std::max(1.0, std::ceil(extent_x / spacing_m - 1e-9)));
  const auto ny = static_cast<std::size_t>(std::max(1.0, std::ceil(extent_y / spacing_m - 1e-9)));
  const auto radius_cells =
      static_cast<std::ptrdiff_t>(std::ceil(0.5 * spacing_m / grid.cell_size_m));

  std::vector<std::uint8_t> taken(grid.cell_count(), 0);
  for (std::size_t v = 0; v < ny; ++v) {
    for (std::size_t u = 0; u < nx; ++u) {
      const Vec2 p{grid.x_min + (static_cast<double>(u) + 0.5) * spacing_m,
                   grid.y_min + (static_cast<double>(v) + 0.5) * spacing_m};
      if (p.x > grid.x_min + extent_x || p.y > grid.y_min + extent_y) continue;
      const auto [pi, pj] = grid.cell_of(p);
      std::size_t best_idx = grid.cell_count();
      double best_d = 0.5 * spacing_m;
      for (std::ptrdiff_t dj = -radius_cells; dj <= radius_cells; ++dj) {
        for (std::ptrdiff_t di = -radius_cells; di <= radius_cells; ++di) {
          const std::ptrdiff_t ci = static_cast<std::ptrdiff_t>(pi) + di;
          const std::ptrdiff_t cj = static_cast<std::ptrdiff_t>(pj) + dj;
          if (ci < 0 || cj < 0 || ci >= static_cast<std::ptrdiff_t>(grid.width) ||
              cj >= static_cast<std::ptrdiff_t>(grid.height)) {
            continue;
          }
          const std::size_t idx =
              grid.index(static_cast<std::size_t>(ci), static_cast<std::size_t>(cj));
          if (!mask.is_outdoor(idx)) continue;
          const double d = distance(p, grid.cell_center(idx));
          if (d < best_d || (d == best_d && idx < best_idx)) {
            best_d = d;
            best_idx = idx;
          }
        }
      }
      if (best_idx < grid.cell_count()) taken[best_idx] = 1;
    }
  }
  std::vector<Candidate> candidates;
  for (std::size_t idx = 0; idx < taken.size(); ++idx) {
    if (taken[idx]) candidates.push_back({grid.cell_center(idx), idx});
  }
  return candidates;
}

/// One coverage set per candidate, computed with the station template at the
/// candidate position. Parallel across candidates; output order is fixed.
inline CandidateCache build_candidates(const PlacementProblem& problem, unsigned threads = 0) {
  CandidateCache cache;
  cache.candidates = candidate_grid(problem.mask, problem.candidate_spacing_m);
  if (cache.candidates.empty()) {
    throw ValidationError("no outdoor candidate sites in the scene");
  }
  cache.sets.resize(cache.candidates.size());
  parallel_chunks(cache.candidates.size(), threads, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Transmitter tx = problem.station.at(cache.candidates[k].position);
      const CoverageMap map = compute_coverage_map(problem.scene, problem.mask, tx,
                                                   problem.tracer, 1);
      cache.sets[k] = coverage_set(map, problem.mask, problem.sensitivity_dbm);
    }
  });
  cache.maps_computed = cache.candidates.size();
  return cache;
}

namespace detail {

inline double ratio_of(std::size_t covered, const CellMask& mask) {
  return static_cast<double>(covered) / static_cast<double>(mask.outdoor_count);
}

inline void append_site(PlacementSolution& out, const CandidateCache& cache, std::size_t idx,
                        CellBitset& covered_union, const CellMask& mask) {
  covered_union |= cache.sets[idx].covered;
  out.sites.push_back(cache.candidates[idx].position);
  out.site_indices.push_back(idx);
  out.ratio_curve.push_back(ratio_of(covered_union.count(), mask));
}

}  // namespace detail

/// Greedy maximum marginal coverage: each step adds the candidate covering the
/// most not-yet-covered outdoor cells (ties to the lowest candidate index), until
/// the target ratio is met or no candidate adds a new cell. A saturated-below-
/// target run is returned with target_reached == false.
inline PlacementSolution greedy_placement(const PlacementProblem& problem,
                                          const CandidateCache& cache) {
  if (problem.mask.outdoor_count == 0) throw ValidationError("scene has no outdoor cells");
  const double target = std::min(problem.target_ratio, 1.0);
  if (!(target > 0.0)) throw ValidationError("target_ratio must be in (0, 1]");

  PlacementSolution out;
  out.algorithm = PlacementAlgorithm::kGreedy;
  out.evaluations = cache.maps_computed;
  CellBitset covered_union(problem.mask.grid.cell_count());

  for (;;) {
    std::size_t best_gain = 0;
    std::size_t best_idx = cache.candidates.size();
    for (std::size_t c = 0; c < cache.sets.size(); ++c) {
      const std::size_t gain = cache.sets[c].covered.count_and_not(covered_union);
      if (gain > best_gain) {
        best_gain = gain;
        best_idx = c;
      }
    }
    if (best_gain == 0) break;  // saturated
    detail::append_site(out, cache, best_idx, covered_union, problem.mask);
    if (out.ratio_curve.back() >= target) {
      out.target_reached = true;
      break;
    }
  }
  out.final_ratio = out.ratio_curve.empty() ? 0.0 : out.ratio_curve.back();
  return out;
}

/// Stochastic check of the greedy result: stations are added one at a time; the
/// newest station samples iters_per_station candidates without replacement
/// (seed-deterministic) and keeps the one maximizing union coverage, previously
/// placed stations stay fixed. With iters_per_station >= candidate count each step
/// degenerates to the greedy choice.
inline PlacementSolution hill_climb_placement(const PlacementProblem& problem,
                                              const CandidateCache& cache,
                                              std::size_t iters_per_station,
                                              std::uint64_t seed) {
  if (iters_per_station < 1) throw ValidationError("iters_per_station must be >= 1");
  if (problem.mask.outdoor_count == 0) throw ValidationError("scene has no outdoor cells");
  const double target = std::min(problem.target_ratio, 1.0);
  if (!(target > 0.0)) throw ValidationError("target_ratio must be in (0, 1]");

  PlacementSolution out;
  out.algorithm = PlacementAlgorithm::kHill;
  out.evaluations = cache.maps_computed;
  CellBitset covered_union(problem.mask.grid.cell_count());
  Rng rng(seed);
  std::vector<std::size_t> order(cache.candidates.size());

  for (;;) {
    for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
    rng.shuffle(order);
    const std::size_t draws = std::min(iters_per_station, order.size());

    std::size_t best_count = 0;
    std::size_t best_idx = cache.candidates.size();
    for (std::size_t d = 0; d < draws; ++d) {
      const std::size_t c = order[d];
      const std::size_t count =
          covered_union.count() + cache.sets[c].covered.count_and_not(covered_union);
      if (count > best_count || (count == best_count && c < best_idx)) {
        best_count = count;
        best_idx = c;
      }
    }
    if (best_idx == cache.candidates.size() ||
        best_count <= covered_union.count()) {
      break;  // the sampled step adds nothing new
    }
    detail::append_site(out, cache, best_idx, covered_union, problem.mask);
    if (out.ratio_curve.back() >= target) {
      out.target_reached = true;
      break;
    }
  }
  out.final_ratio = out.ratio_curve.empty() ? 0.0 : out.ratio_curve.back();
  return out;
}

/// Environment-agnostic baseline: for k = 1, 2, ... place k^2 stations at the
/// centers of a k x k partition of the bounds, each snapped to the nearest outdoor
/// candidate, and stop at the first k whose coverage meets the target. k_ratios
/// records the coverage of every attempted stage.
inline PlacementSolution uniform_placement(const PlacementProblem& problem,
                                           const CandidateCache& cache,
                                           std::size_t k_max = 12) {
  if (problem.mask.outdoor_count == 0) throw ValidationError("scene has no outdoor cells");
  if (k_max < 1) throw ValidationError("k_max must be >= 1");
  const double target = std::min(problem.target_ratio, 1.0);
  const Grid& grid = problem.mask.grid;
  const double extent_x = static_cast<double>(grid.width) * grid.cell_size_m;
  const double extent_y = static_cast<double>(grid.height) * grid.cell_size_m;

  PlacementSolution out;
  out.algorithm = PlacementAlgorithm::kUniform;
  out.evaluations = cache.maps_computed;

  for (std::size_t k = 1; k <= k_max; ++k) {
    std::vector<std::size_t> chosen;
    chosen.reserve(k * k);
    for (std::size_t b = 0; b < k; ++b) {
      for (std::size_t a = 0; a < k; ++a) {
        const Vec2 center{grid.x_min + (static_cast<double>(a) + 0.5) * extent_x /
                                           static_cast<double>(k),
                          grid.y_min + (static_cast<double>(b) + 0.5) * extent_y /
                                           static_cast<double>(k)};
        std::size_t nearest = 0;
        double nearest_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cache.candidates.size(); ++c) {
          const double d = distance(center, cache.candidates[c].position);
          if (d < nearest_d) {
            nearest_d = d;
            nearest = c;
          }
        }
        chosen.push_back(nearest);
      }
    }

    CellBitset covered_union(grid.cell_count());
    PlacementSolution stage;
    stage.algorithm = PlacementAlgorithm::kUniform;
    stage.evaluations = out.evaluations;
    stage.k_ratios = out.k_ratios;
    for (const std::size_t c : chosen) {
      detail::append_site(stage, cache, c, covered_union, problem.mask);
    }
    const double ratio = stage.ratio_curve.back();
    stage.k_ratios.push_back(ratio);
    stage.final_ratio = ratio;
    out = std::move(stage);
    if (ratio >= target) {
      out.target_reached = true;
      return out;
    }
  }
  return out;  // target unreachable within k_max; last stage returned
}

/// Exhaustive oracle for small instances: scans subsets by increasing cardinality
/// in lexicographic order and returns the first subset meeting the target, which
/// is the lexicographically least among the minimum-cardinality solutions.
inline PlacementSolution brute_force_placement(const PlacementProblem& problem,
                                               const CandidateCache& cache,
                                               std::size_t max_candidates = 20) {
  const std::size_t n = cache.candidates.size();
  if (n > max_candidates) {
    throw ValidationError("brute_force_placement: " + std::to_string(n) +
                          " candidates exceed the limit of " + std::to_string(max_candidates) +
                          "; shrink the scene or raise candidate spacing");
  }
  if (problem.mask.outdoor_count == 0) throw ValidationError("scene has no outdoor cells");
  const double target = std::min(problem.target_ratio, 1.0);

  PlacementSolution out;
  out.algorithm = PlacementAlgorithm::kBrute;
  out.evaluations = cache.maps_computed;

  std::vector<std::size_t> pick;
  for (std::size_t size = 1; size <= n; ++size) {
    pick.resize(size);
    for (std::size_t i = 0; i < size; ++i) pick[i] = i;
    for (;;) {
      CellBitset covered_union(problem.mask.grid.cell_count());
      for (const std::size_t c : pick) covered_union |= cache.sets[c].covered;
      if (detail::ratio_of(covered_union.count(), problem.mask) >= target) {
        CellBitset acc(problem.mask.grid.cell_count());
        for (const std::size_t c : pick) {
          detail::append_site(out, cache, c, acc, problem.mask);
        }
        out.final_ratio = out.ratio_curve.back();
        out.target_reached = true;
        return out;
      }
      // next lexicographic combination
      std::size_t i = size;
      while (i > 0 && pick[i - 1] == n - size + (i - 1)) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < size; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return out;  // no subset reaches the target
}

}  // namespace cellplan
