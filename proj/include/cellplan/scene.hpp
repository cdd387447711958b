#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cellplan/errors.hpp"
#include "cellplan/geometry.hpp"
#include "cellplan/rng.hpp"

namespace cellplan {

struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool contains(Vec2 p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  friend bool operator==(const Rect& a, const Rect& b) {
    return a.x_min == b.x_min && a.y_min == b.y_min && a.x_max == b.x_max && a.y_max == b.y_max;
  }
};

struct Building {
  Polygon footprint;  // counter-clockwise
  double height_m = 0.0;

  friend bool operator==(const Building& a, const Building& b) {
    return a.height_m == b.height_m && a.footprint == b.footprint;
  }
};

/// 2.5D world: flat ground, extruded footprints. Units are meters throughout.
struct Scene {
  Rect bounds;
  std::vector<Building> buildings;
  std::string name;

  friend bool operator==(const Scene& a, const Scene& b) {
    return a.name == b.name && a.bounds == b.bounds && a.buildings == b.buildings;
  }
};

struct GridSpec {
  double cell_size_m = 5.0;
  double receiver_height_m = 1.5;
};

inline constexpr std::size_t kDefaultMaxCells = 400 * 400;

/// Resolved discretization of a scene's bounds. Cell (i, j) has center
/// (x_min + (i+0.5)*cell, y_min + (j+0.5)*cell); this mapping is the single
/// source of truth for every module that indexes cells.
struct Grid {
  double x_min = 0.0;
  double y_min = 0.0;
  double cell_size_m = 5.0;
  double receiver_height_m = 1.5;
  std::size_t width = 0;
  std::size_t height = 0;

  std::size_t cell_count() const { return width * height; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * width + i; }

  Vec2 cell_center(std::size_t i, std::size_t j) const {
    return {x_min + (static_cast<double>(i) + 0.5) * cell_size_m,
            y_min + (static_cast<double>(j) + 0.5) * cell_size_m};
  }
  Vec2 cell_center(std::size_t idx) const { return cell_center(idx % width, idx / width); }

  /// Cell containing p; points on the outer max edges map to the last cell.
  std::pair<std::size_t, std::size_t> cell_of(Vec2 p) const {
    auto clamp_axis = [](double v, std::size_t n) {
      if (v < 0.0) v = 0.0;
      std::size_t c = static_cast<std::size_t>(v);
      if (c >= n) c = n - 1;
      return c;
    };
    return {clamp_axis((p.x - x_min) / cell_size_m, width),
            clamp_axis((p.y - y_min) / cell_size_m, height)};
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.x_min == b.x_min && a.y_min == b.y_min && a.cell_size_m == b.cell_size_m &&
           a.receiver_height_m == b.receiver_height_m && a.width == b.width &&
           a.height == b.height;
  }
};

inline Grid make_grid(const Rect& bounds, const GridSpec& spec,
                      std::size_t max_cells = kDefaultMaxCells) {
  if (spec.cell_size_m <= 0.0) throw ValidationError("cell_size_m must be > 0");
  if (spec.receiver_height_m < 0.0) throw ValidationError("receiver_height_m must be >= 0");
  if (bounds.width() <= 0.0 || bounds.height() <= 0.0) {
    throw ValidationError("scene bounds must have positive width and height");
  }
  auto cells_along = [&](double extent) {
    const double n = std::ceil(extent / spec.cell_size_m - 1e-9);
    return static_cast<std::size_t>(n < 1.0 ? 1.0 : n);
  };
  Grid grid;
  grid.x_min = bounds.x_min;
  grid.y_min = bounds.y_min;
  grid.cell_size_m = spec.cell_size_m;
  grid.receiver_height_m = spec.receiver_height_m;
  grid.width = cells_along(bounds.width());
  grid.height = cells_along(bounds.height());
  if (grid.cell_count() > max_cells) {
    throw ValidationError("grid of " + std::to_string(grid.width) + "x" +
                          std::to_string(grid.height) + " cells exceeds the limit of " +
                          std::to_string(max_cells) +
                          "; increase cell_size_m or shrink the scene");
  }
  return grid;
}

enum class CellState : std::uint8_t { kOutdoor = 0, kBuilding = 1 };

struct CellMask {
  Grid grid;
  std::vector<CellState> cells;
  std::size_t outdoor_count = 0;

  bool is_outdoor(std::size_t idx) const { return cells[idx] == CellState::kOutdoor; }
  std::size_t building_count() const { return cells.size() - outdoor_count; }
};

/// Snaps every coordinate to the canonical 1e-6 m resolution of the scene file
/// format, so generated scenes survive a save/load round trip bit-exactly.
inline double snap_coordinate(double v) {
  return std::round(v * 1e6) / 1e6;
}

/// Validates all scene invariants. Clockwise footprints are re-oriented in place
/// and reported through `warnings`. Error messages name the offending building.
inline void validate_scene(Scene& scene, std::vector<std::string>* warnings = nullptr) {
  if (scene.bounds.width() <= 0.0 || scene.bounds.height() <= 0.0) {
    throw ValidationError("scene bounds must have positive width and height");
  }
  for (std::size_t b = 0; b < scene.buildings.size(); ++b) {
    Building& building = scene.buildings[b];
    const std::string tag = "building " + std::to_string(b);
    if (building.footprint.size() < 3) {
      throw ValidationError(tag + ": footprint needs at least 3 vertices");
    }
    if (!(building.height_m > 0.0)) {
      throw ValidationError(tag + ": height_m must be > 0");
    }
    for (const Vec2& v : building.footprint) {
      if (!scene.bounds.contains(v)) {
        throw ValidationError(tag + ": vertex (" + std::to_string(v.x) + ", " +
                              std::to_string(v.y) + ") lies outside scene bounds");
      }
    }
    if (!polygon_is_simple(building.footprint)) {
      throw ValidationError(tag + ": footprint polygon is not simple");
    }
    const double signed_area = polygon_signed_area(building.footprint);
    if (std::abs(signed_area) <= 0.0) {
      throw ValidationError(tag + ": footprint polygon has zero area");
    }
    if (signed_area < 0.0) {
      std::reverse(building.footprint.begin(), building.footprint.end());
      if (warnings) {
        warnings->push_back(tag + ": clockwise footprint re-oriented to counter-clockwise");
      }
    }
  }
}

/// A cell is Building iff its center lies inside any footprint (boundary included).
inline CellMask rasterize(const Scene& scene, const GridSpec& spec,
                          std::size_t max_cells = kDefaultMaxCells) {
  CellMask mask;
  mask.grid = make_grid(scene.bounds, spec, max_cells);
  mask.cells.assign(mask.grid.cell_count(), CellState::kOutdoor);

  struct Bbox {
    double x_min, y_min, x_max, y_max;
  };
  std::vector<Bbox> boxes;
  boxes.reserve(scene.buildings.size());
  for (const Building& b : scene.buildings) {
    Bbox box{b.footprint[0].x, b.footprint[0].y, b.footprint[0].x, b.footprint[0].y};
    for (const Vec2& v : b.footprint) {
      box.x_min = std::min(box.x_min, v.x);
      box.y_min = std::min(box.y_min, v.y);
      box.x_max = std::max(box.x_max, v.x);
      box.y_max = std::max(box.y_max, v.y);
    }
    boxes.push_back(box);
  }

  for (std::size_t j = 0; j < mask.grid.height; ++j) {
    for (std::size_t i = 0; i < mask.grid.width; ++i) {
      const Vec2 c = mask.grid.cell_center(i, j);
      for (std::size_t b = 0; b < scene.buildings.size(); ++b) {
        const Bbox& box = boxes[b];
        if (c.x < box.x_min || c.x > box.x_max || c.y < box.y_min || c.y > box.y_max) continue;
        if (point_in_polygon(c, scene.buildings[b].footprint)) {
          mask.cells[mask.grid.index(i, j)] = CellState::kBuilding;
          break;
        }
      }
    }
  }
  mask.outdoor_count = 0;
  for (const CellState s : mask.cells) {
    if (s == CellState::kOutdoor) ++mask.outdoor_count;
  }
  return mask;
}

enum class SceneKind { kEmpty, kUniformCity, kAsymmetricCity };

inline SceneKind scene_kind_from_string(const std::string& s) {
  if (s == "empty") return SceneKind::kEmpty;
  if (s == "uniform-city") return SceneKind::kUniformCity;
  if (s == "asymmetric-city") return SceneKind::kAsymmetricCity;
  throw ValidationError("unknown synthetic scene kind: " + s);
}

struct SyntheticSceneParams {
  Rect bounds{0.0, 0.0, 300.0, 300.0};
  double density = 0.3;  // footprint area fraction of an occupied block
  double height_min_m = 10.0;
  double height_max_m = 30.0;
  double block_m = 30.0;  // city-block pitch; one candidate building per block
  std::string name;       // defaults to the kind string
};

namespace detail {

// Buildings keep this fraction of the block clear on every side, so the block
// grid always leaves open streets and no pocket can be sealed off.
inline constexpr double kStreetMarginFrac = 0.1;

inline Building make_block_building(Rect block, double side_frac, double height, Rng& rng) {
  const double side_x = block.width() * side_frac;
  const double side_y = block.height() * side_frac;
  const double margin_x = block.width() * kStreetMarginFrac;
  const double margin_y = block.height() * kStreetMarginFrac;
  const double x0 = block.x_min + margin_x +
                    rng.next_in(0.0, block.width() - side_x - 2.0 * margin_x);
  const double y0 = block.y_min + margin_y +
                    rng.next_in(0.0, block.height() - side_y - 2.0 * margin_y);
  Building b;
  b.height_m = snap_coordinate(height);
  b.footprint = {{snap_coordinate(x0), snap_coordinate(y0)},
                 {snap_coordinate(x0 + side_x), snap_coordinate(y0)},
                 {snap_coordinate(x0 + side_x), snap_coordinate(y0 + side_y)},
                 {snap_coordinate(x0), snap_coordinate(y0 + side_y)}};
  return b;
}

}  // namespace detail

/// Deterministic synthetic scenes. uniform-city fills a jittered block grid;
/// asymmetric-city concentrates at least 80% of the building area in the right
/// half of the bounds. Buildings never overlap (one per block, inset).
inline Scene generate_synthetic_scene(SceneKind kind, const SyntheticSceneParams& params,
                                      std::uint64_t seed) {
  if (params.density < 0.0 || params.density > 1.0) {
    throw ValidationError("density must lie in [0, 1]");
  }
  if (params.height_min_m <= 0.0 || params.height_max_m < params.height_min_m) {
    throw ValidationError("height range must be positive and ordered");
  }
  Scene scene;
  scene.bounds = params.bounds;
  switch (kind) {
    case SceneKind::kEmpty:
      scene.name = params.name.empty() ? "empty" : params.name;
      return scene;
    case SceneKind::kUniformCity:
      scene.name = params.name.empty() ? "uniform-city" : params.name;
      break;
    case SceneKind::kAsymmetricCity:
      scene.name = params.name.empty() ? "asymmetric-city" : params.name;
      break;
  }

  const double side_frac = std::sqrt(params.density);
  if (side_frac > 1.0 - 2.0 * detail::kStreetMarginFrac) {
    throw ValidationError("density " + std::to_string(params.density) +
                          " cannot be placed without closing the street grid");
  }

  Rng rng(seed);
  const std::size_t nx =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(params.bounds.width() / params.block_m)));
  const std::size_t ny =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(params.bounds.height() / params.block_m)));
  const double bw = params.bounds.width() / static_cast<double>(nx);
  const double bh = params.bounds.height() / static_cast<double>(ny);
  const double mid_x = 0.5 * (params.bounds.x_min + params.bounds.x_max);

  for (std::size_t gy = 0; gy < ny; ++gy) {
    for (std::size_t gx = 0; gx < nx; ++gx) {
      const Rect block{params.bounds.x_min + static_cast<double>(gx) * bw,
                       params.bounds.y_min + static_cast<double>(gy) * bh,
                       params.bounds.x_min + static_cast<double>(gx + 1) * bw,
                       params.bounds.y_min + static_cast<double>(gy + 1) * bh};
      const bool right_half = 0.5 * (block.x_min + block.x_max) > mid_x;

      double place_prob = 1.0;
      double frac = side_frac;
      if (kind == SceneKind::kAsymmetricCity) {
        place_prob = right_half ? 0.9 : 0.15;
        frac = right_half ? side_frac : 0.5 * side_frac;
      }
      const bool place = rng.next_bool(place_prob);
      const double height = rng.next_in(params.height_min_m, params.height_max_m);
      if (!place || frac <= 0.0) continue;
      scene.buildings.push_back(detail::make_block_building(block, frac, height, rng));
    }
  }

  if (kind == SceneKind::kAsymmetricCity) {
    // Enforce the right-half area share deterministically: drop left-half
    // buildings (largest first) until right area >= 4x left area.
    auto half_areas = [&]() {
      double left = 0.0, right = 0.0;
      for (const Building& b : scene.buildings) {
        double cx = 0.0;
        for (const Vec2& v : b.footprint) cx += v.x;
        cx /= static_cast<double>(b.footprint.size());
        (cx > mid_x ? right : left) += polygon_area(b.footprint);
      }
      return std::pair<double, double>{left, right};
    };
    auto [left, right] = half_areas();
    while (left > 0.0 && right < 4.0 * left) {
      std::size_t drop = scene.buildings.size();
      double drop_area = -1.0;
      for (std::size_t i = 0; i < scene.buildings.size(); ++i) {
        double cx = 0.0;
        for (const Vec2& v : scene.buildings[i].footprint) cx += v.x;
        cx /= static_cast<double>(scene.buildings[i].footprint.size());
        const double area = polygon_area(scene.buildings[i].footprint);
        if (cx <= mid_x && area > drop_area) {
          drop = i;
          drop_area = area;
        }
      }
      if (drop == scene.buildings.size()) break;
      scene.buildings.erase(scene.buildings.begin() + static_cast<std::ptrdiff_t>(drop));
      std::tie(left, right) = half_areas();
    }
  }

  validate_scene(scene);
  return scene;
}

}  // namespace cellplan
