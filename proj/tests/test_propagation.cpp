#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cellplan/propagation.hpp"
#include "cellplan/scene.hpp"
#include "oracles.hpp"

using namespace cellplan;

namespace {

double center_distance_3d(const Grid& grid, const Transmitter& tx, std::size_t idx) {
  const Vec2 c = grid.cell_center(idx);
  const double dz = tx.height_m - grid.receiver_height_m;
  return std::sqrt(dot(c - tx.position, c - tx.position) + dz * dz);
}

Scene wall_scene() {
  // A full-height wall splitting the scene in two.
  Scene scene;
  scene.bounds = {0, 0, 100, 100};
  scene.name = "wall";
  scene.buildings.push_back({{{48, 0}, {52, 0}, {52, 100}, {48, 100}}, 1000.0});
  return scene;
}

}  // namespace

TEST_CASE("free space path loss closed form") {
  // Oracle values computed by hand from 20log10(d) + 20log10(f) - 147.55.
  CHECK(free_space_path_loss_db(1.0, 1e9) == Catch::Approx(32.45).margin(0.01));
  const double f = 2.4e9;
  CHECK(free_space_path_loss_db(2.0, f) - free_space_path_loss_db(1.0, f) ==
        Catch::Approx(20.0 * std::log10(2.0)).margin(1e-12));
  const double d = 120.0;
  CHECK(free_space_path_loss_db(d, 3.5e9) - free_space_path_loss_db(d, 1.7e9) ==
        Catch::Approx(20.0 * std::log10(3.5 / 1.7)).margin(1e-9));
  CHECK_THROWS_AS(free_space_path_loss_db(0.0, 1e9), ValidationError);
  CHECK_THROWS_AS(free_space_path_loss_db(10.0, -1.0), ValidationError);
}

TEST_CASE("empty scene: analytic direct path equals Friis exactly") {
  Scene scene;
  scene.bounds = {0, 0, 100, 100};
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  const Transmitter tx{{50, 50}, 15.0, 17.0, 3.5e9};
  RayTracerConfig cfg;
  cfg.num_samples = 5000;
  cfg.max_depth = 3;
  const CoverageMap map = compute_coverage_map(scene, mask, tx, cfg);
  for (std::size_t idx = 0; idx < map.path_loss_db.size(); ++idx) {
    REQUIRE(map.reached(idx));
    const double friis = free_space_path_loss_db(center_distance_3d(mask.grid, tx, idx),
                                                 tx.frequency_hz);
    REQUIRE(map.path_loss_db[idx] == friis);  // exact, not approximate
  }
}

TEST_CASE("blocking wall with max_depth 0 leaves the far side unreached") {
  const Scene scene = wall_scene();
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  const Transmitter tx{{10, 50}, 15.0, 17.0, 3.5e9};
  RayTracerConfig cfg;
  cfg.num_samples = 20000;
  cfg.max_depth = 0;
  const CoverageMap map = compute_coverage_map(scene, mask, tx, cfg);
  std::size_t far_reached = 0, near_reached = 0;
  for (std::size_t j = 0; j < mask.grid.height; ++j) {
    for (std::size_t i = 0; i < mask.grid.width; ++i) {
      const std::size_t idx = mask.grid.index(i, j);
      if (!mask.is_outdoor(idx)) continue;
      const double x = mask.grid.cell_center(i, j).x;
      if (x > 52.0 && map.reached(idx)) far_reached++;
      if (x < 48.0 && map.reached(idx)) near_reached++;
    }
  }
  CHECK(far_reached == 0);
  CHECK(near_reached > 0);
}

TEST_CASE("building cells are always unreached") {
  const Scene scene = wall_scene();
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  const Transmitter tx{{10, 50}, 15.0, 17.0, 3.5e9};
  RayTracerConfig cfg;
  cfg.num_samples = 10000;
  cfg.max_depth = 2;
  const CoverageMap map = compute_coverage_map(scene, mask, tx, cfg);
  for (std::size_t idx = 0; idx < map.path_loss_db.size(); ++idx) {
    if (!mask.is_outdoor(idx)) CHECK_FALSE(map.reached(idx));
  }
}

TEST_CASE("LOS floor: no reached cell beats free space at the center distance") {
  const Scene scene = generate_synthetic_scene(SceneKind::kUniformCity,
                                               {{0, 0, 200, 200}, 0.3, 10.0, 30.0}, 5);
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  const Transmitter tx{{100, 100}, 15.0, 17.0, 3.5e9};
  RayTracerConfig cfg;
  cfg.num_samples = 50000;
  cfg.max_depth = 4;
  const CoverageMap map = compute_coverage_map(scene, mask, tx, cfg);
  for (std::size_t idx = 0; idx < map.path_loss_db.size(); ++idx) {
    if (!map.reached(idx)) continue;
    const double friis = free_space_path_loss_db(center_distance_3d(mask.grid, tx, idx),
                                                 tx.frequency_hz);
    REQUIRE(map.path_loss_db[idx] >= friis - 1e-9);
  }
}

TEST_CASE("determinism: thread count never changes the map") {
  const Scene scene = generate_synthetic_scene(SceneKind::kAsymmetricCity,
                                               {{0, 0, 200, 200}, 0.3, 10.0, 30.0}, 9);
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  const Transmitter tx{{60, 100}, 15.0, 17.0, 3.5e9};
  RayTracerConfig cfg;
  cfg.num_samples = 30000;
  cfg.max_depth = 5;
  cfg.seed = 77;
  const CoverageMap one = compute_coverage_map(scene, mask, tx, cfg, 1);
  const CoverageMap four = compute_coverage_map(scene, mask, tx, cfg, 4);
  const CoverageMap eight = compute_coverage_map(scene, mask, tx, cfg, 8);
  CHECK(one.path_loss_db == four.path_loss_db);  // bit-identical
  CHECK(one.path_loss_db == eight.path_loss_db);
}

TEST_CASE("monotonicity in reflection depth") {
  const Scene scene = generate_synthetic_scene(SceneKind::kUniformCity,
                                               {{0, 0, 200, 200}, 0.35, 16.0, 30.0}, 3);
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  const Transmitter tx{{100, 100}, 15.0, 17.0, 3.5e9};
  RayTracerConfig cfg;
  cfg.num_samples = 20000;
  cfg.seed = 5;
  CoverageMap prev;
  for (int depth : {0, 1, 2, 4}) {
    cfg.max_depth = depth;
    CoverageMap map = compute_coverage_map(scene, mask, tx, cfg);
    if (depth > 0) {
      for (std::size_t idx = 0; idx < map.path_loss_db.size(); ++idx) {
        REQUIRE(map.path_loss_db[idx] <= prev.path_loss_db[idx]);
      }
    }
    prev = std::move(map);
  }
}

TEST_CASE("monotonicity in stratified sample count") {
  const Scene scene = generate_synthetic_scene(SceneKind::kUniformCity,
                                               {{0, 0, 200, 200}, 0.35, 16.0, 30.0}, 4);
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  const Transmitter tx{{60, 60}, 15.0, 17.0, 3.5e9};
  RayTracerConfig cfg;
  cfg.max_depth = 3;
  cfg.seed = 11;
  cfg.stratified = true;
  cfg.analytic_direct = false;  // make the ray field carry the whole map
  CoverageMap prev;
  for (std::size_t n : {4096u, 8192u, 16384u}) {
    cfg.num_samples = n;
    CoverageMap map = compute_coverage_map(scene, mask, tx, cfg);
    if (n > 4096u) {
      for (std::size_t idx = 0; idx < map.path_loss_db.size(); ++idx) {
        REQUIRE(map.path_loss_db[idx] <= prev.path_loss_db[idx]);
      }
    }
    prev = std::move(map);
  }
}

TEST_CASE("height gating: above-roof transmitter sees free space everywhere") {
  Scene scene;
  scene.bounds = {0, 0, 100, 100};
  scene.name = "low-rise";
  scene.buildings.push_back({{{20, 20}, {35, 20}, {35, 35}, {20, 35}}, 12.0});
  scene.buildings.push_back({{{60, 55}, {80, 55}, {80, 70}, {60, 70}}, 9.0});
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  RayTracerConfig cfg;
  cfg.num_samples = 200000;  // dense enough that every cell sees a below-center entry
  cfg.max_depth = 2;

  Transmitter low{{50, 50}, 15.0, 17.0, 3.5e9};
  const CoverageMap before = compute_coverage_map(scene, mask, low, cfg);

  Transmitter high = low;
  high.height_m = 20.0;  // taller than every roof
  const CoverageMap after = compute_coverage_map(scene, mask, high, cfg);
  for (std::size_t idx = 0; idx < after.path_loss_db.size(); ++idx) {
    if (!before.reached(idx)) continue;
    const double friis = free_space_path_loss_db(center_distance_3d(mask.grid, high, idx),
                                                 high.frequency_hz);
    REQUIRE(after.path_loss_db[idx] == friis);
  }
}

TEST_CASE("single-bounce losses match the image-method oracle") {
  // Blocker shadows the right half; a long reflector wall at the top bounces rays
  // into the shadow. Single wall face in play, max_depth = 1.
  Scene scene;
  scene.bounds = {0, 0, 200, 200};
  scene.buildings.push_back({{{60, 80}, {64, 80}, {64, 120}, {60, 120}}, 40.0});   // blocker
  scene.buildings.push_back({{{0, 170}, {200, 170}, {200, 176}, {0, 176}}, 40.0});  // reflector
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  const Transmitter tx{{30, 100}, 15.0, 17.0, 3.5e9};
  RayTracerConfig cfg;
  cfg.num_samples = 400000;
  cfg.max_depth = 1;
  cfg.reflection_loss_db = 6.0;
  const CoverageMap map = compute_coverage_map(scene, mask, tx, cfg);

  const oracles::ImageOracleInput oracle_in{
      tx.position.x, tx.position.y, tx.height_m, mask.grid.receiver_height_m,
      tx.frequency_hz, cfg.reflection_loss_db,
      oracles::Segment2{0, 170, 200, 170}};  // the reflector's south face

  auto blocked_by_blocker = [&](double ax, double ay, double bx, double by) {
    return oracles::segment_hits_rect(ax, ay, bx, by, 60, 80, 64, 120);
  };

  std::size_t oracle_cells = 0, within = 0;
  for (std::size_t j = 0; j < mask.grid.height; ++j) {
    for (std::size_t i = 0; i < mask.grid.width; ++i) {
      const std::size_t idx = mask.grid.index(i, j);
      if (!mask.is_outdoor(idx)) continue;
      const Vec2 c = mask.grid.cell_center(i, j);
      if (c.y > 160.0) continue;  // stay clear of the reflector itself

      // Cell must sit fully in the blocker's shadow: the sight lines to the
      // center and all four corners cross the blocker.
      bool fully_shadowed = blocked_by_blocker(tx.position.x, tx.position.y, c.x, c.y);
      for (const auto& [dx, dy] :
           {std::pair{-2.5, -2.5}, {2.5, -2.5}, {2.5, 2.5}, {-2.5, 2.5}}) {
        fully_shadowed = fully_shadowed && blocked_by_blocker(tx.position.x, tx.position.y,
                                                              c.x + dx, c.y + dy);
      }
      if (!fully_shadowed) continue;

      const auto oracle = oracles::image_method_loss_db(oracle_in, c.x, c.y);
      if (!oracle) continue;

      // Both legs of the mirror path must avoid the blocker.
      const double ix = tx.position.x, iy = 2.0 * 170.0 - tx.position.y;
      const double t = (170.0 - iy) / (c.y - iy);
      const double px = ix + t * (c.x - ix);
      if (blocked_by_blocker(tx.position.x, tx.position.y, px, 170.0)) continue;
      if (blocked_by_blocker(px, 170.0, c.x, c.y)) continue;

      ++oracle_cells;
      if (map.reached(idx) && std::abs(map.path_loss_db[idx] - *oracle) <= 1.0) ++within;
    }
  }
  INFO("oracle cells: " << oracle_cells << ", within 1 dB: " << within);
  REQUIRE(oracle_cells >= 30);
  CHECK(static_cast<double>(within) >= 0.95 * static_cast<double>(oracle_cells));
}

TEST_CASE("coverage sets, ratios, overlap and blind") {
  Scene scene;
  scene.bounds = {0, 0, 50, 50};
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});  // 10x10, all outdoor
  const Grid& grid = mask.grid;

  auto make_set = [&](std::size_t x_begin, std::size_t x_end) {
    CoverageSet s{grid, -90.0, CellBitset(grid.cell_count())};
    for (std::size_t j = 0; j < grid.height; ++j) {
      for (std::size_t i = x_begin; i < x_end; ++i) s.covered.set(grid.index(i, j));
    }
    return s;
  };

  const CoverageSet left = make_set(0, 3);    // 30%
  const CoverageSet mid = make_set(3, 6);     // 30%, disjoint from left
  const CoverageSet all = make_set(0, 10);    // 100%

  const CoverageSet one[] = {all};
  CHECK(coverage_ratio(one, mask) == Catch::Approx(1.0));
  const CoverageSet disjoint[] = {left, mid};
  CHECK(coverage_ratio(disjoint, mask) == Catch::Approx(0.6));
  const CoverageSet duplicated[] = {left, left};
  CHECK(coverage_ratio(duplicated, mask) == Catch::Approx(0.3));
  CHECK(coverage_ratio(std::span<const CoverageSet>{}, mask) == 0.0);

  const auto ob_disjoint = overlap_and_blind(disjoint, all, mask);
  CHECK(ob_disjoint.overlap_ratio == Catch::Approx(0.0));
  CHECK(ob_disjoint.blind_ratio == Catch::Approx(0.4));
  const CoverageSet self[] = {all};
  const auto ob_self = overlap_and_blind(self, all, mask);
  CHECK(ob_self.blind_ratio == Catch::Approx(0.0));
  const CoverageSet both_full[] = {all, all};
  CHECK(overlap_and_blind(both_full, all, mask).overlap_ratio == Catch::Approx(1.0));
}

TEST_CASE("coverage_set thresholds") {
  Scene scene;
  scene.bounds = {0, 0, 100, 100};
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  const Transmitter tx{{50, 50}, 15.0, 17.0, 3.5e9};
  RayTracerConfig cfg;
  cfg.num_samples = 1000;
  const CoverageMap map = compute_coverage_map(scene, mask, tx, cfg);

  const CoverageSet everything = coverage_set(map, mask, -1e9);
  CHECK(everything.covered.count() == mask.outdoor_count);
  const CoverageSet nothing = coverage_set(map, mask,
                                           std::numeric_limits<double>::infinity());
  CHECK(nothing.covered.count() == 0);

  // +10 dB transmit power can only grow the covered set at a fixed threshold.
  Transmitter strong = tx;
  strong.tx_power_dbm += 10.0;
  const CoverageMap strong_map = compute_coverage_map(scene, mask, strong, cfg);
  const CoverageSet weak_set = coverage_set(map, mask, -75.0);
  const CoverageSet strong_set = coverage_set(strong_map, mask, -75.0);
  CHECK(weak_set.covered.count_and_not(strong_set.covered) == 0);
}

TEST_CASE("transmitter preconditions") {
  Scene scene;
  scene.bounds = {0, 0, 100, 100};
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  RayTracerConfig cfg;
  cfg.num_samples = 10;
  CHECK_THROWS_AS(
      compute_coverage_map(scene, mask, Transmitter{{500, 50}, 15.0, 17.0, 3.5e9}, cfg),
      ValidationError);
  CHECK_THROWS_AS(
      compute_coverage_map(scene, mask, Transmitter{{50, 50}, 15.0, 17.0, -1.0}, cfg),
      ValidationError);
  RayTracerConfig bad = cfg;
  bad.num_samples = 0;
  CHECK_THROWS_AS(
      compute_coverage_map(scene, mask, Transmitter{{50, 50}, 15.0, 17.0, 3.5e9}, bad),
      ValidationError);
}
