#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cellplan/placement.hpp"
#include "cellplan/propagation.hpp"
#include "cellplan/scene.hpp"
#include "cellplan/ue.hpp"

using namespace cellplan;

namespace {

NetworkDeployment single_station_net(const Scene& scene, const CellMask& mask, Vec2 pos,
                                     double height, double power_dbm, double sens,
                                     const RayTracerConfig& cfg) {
  NetworkDeployment net;
  net.sensitivity_dbm = sens;
  net.maps.push_back(
      compute_coverage_map(scene, mask, Transmitter{pos, height, power_dbm, 3.5e9}, cfg));
  return net;
}

}  // namespace

TEST_CASE("required uplink power arithmetic") {
  // PL 80 dB to a femto (sens -90, margin 15) -> -90 + 15 + 80 = 5 dBm.
  Scene scene;
  scene.bounds = {0, 0, 50, 50};
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  NetworkDeployment net;
  net.sensitivity_dbm = -90.0;
  CoverageMap map{mask.grid, Transmitter{{25, 25}, 15.0, 17.0, 3.5e9},
                  std::vector<double>(mask.grid.cell_count(), 80.0)};
  net.maps.push_back(map);
  UeSimConfig cfg;
  cfg.snr_margin_db = 15.0;
  const UeSample s = required_uplink_power({10, 10}, net, cfg);
  CHECK(s.required_tx_dbm == Catch::Approx(5.0).margin(1e-12));
  CHECK(s.feasible);

  // PL 120 dB to a macro (sens -100, margin 15) -> 35 dBm, above the 23 dBm cap.
  NetworkDeployment macro_net;
  macro_net.sensitivity_dbm = -100.0;
  CoverageMap macro_map{mask.grid, Transmitter{{25, 25}, 50.0, 47.0, 3.5e9},
                        std::vector<double>(mask.grid.cell_count(), 120.0)};
  macro_net.maps.push_back(macro_map);
  const UeSample m = required_uplink_power({10, 10}, macro_net, cfg);
  CHECK(m.required_tx_dbm == Catch::Approx(35.0).margin(1e-12));
  CHECK_FALSE(m.feasible);
}

TEST_CASE("serving station maximizes downlink rx power with index tie-break") {
  Scene scene;
  scene.bounds = {0, 0, 50, 50};
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  NetworkDeployment net;
  net.sensitivity_dbm = -90.0;
  // Station 0: PL 90 everywhere. Station 1: PL 70 everywhere (stronger).
  net.maps.push_back(CoverageMap{mask.grid, Transmitter{{10, 10}, 15, 17, 3.5e9},
                                 std::vector<double>(mask.grid.cell_count(), 90.0)});
  net.maps.push_back(CoverageMap{mask.grid, Transmitter{{40, 40}, 15, 17, 3.5e9},
                                 std::vector<double>(mask.grid.cell_count(), 70.0)});
  UeSimConfig cfg;
  const UeSample s = required_uplink_power({25, 25}, net, cfg);
  REQUIRE(s.serving_station);
  CHECK(*s.serving_station == 1);
  // Reciprocity: required - (sens + margin) equals the serving map's path loss.
  CHECK(s.required_tx_dbm - (net.sensitivity_dbm + cfg.snr_margin_db) ==
        Catch::Approx(70.0).margin(1e-12));

  // Equal rx power ties to the lower index.
  net.maps[1].path_loss_db.assign(mask.grid.cell_count(), 90.0);
  const UeSample tie = required_uplink_power({25, 25}, net, cfg);
  CHECK(*tie.serving_station == 0);
}

TEST_CASE("populate users: determinism, green region confinement") {
  Scene scene;
  scene.bounds = {0, 0, 100, 100};
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  RayTracerConfig rt;
  rt.num_samples = 1000;
  const NetworkDeployment net =
      single_station_net(scene, mask, {50, 50}, 15.0, 17.0, -90.0, rt);
  UeSimConfig cfg;
  cfg.num_users = 500;
  cfg.seed = 42;
  const auto users_a = populate_users(net, mask, cfg);
  const auto users_b = populate_users(net, mask, cfg);
  REQUIRE(users_a.size() == 500);
  CHECK(users_a == users_b);
  for (const Vec2& u : users_a) {
    CHECK(scene.bounds.contains(u));
  }

  // Green region of one cell: every user lands inside that cell's extent.
  NetworkDeployment tiny = net;
  const std::size_t keep = mask.grid.index(4, 7);
  for (std::size_t idx = 0; idx < tiny.maps[0].path_loss_db.size(); ++idx) {
    if (idx != keep) tiny.maps[0].path_loss_db[idx] = kUnreachedPathLossDb;
  }
  const auto confined = populate_users(tiny, mask, cfg);
  const Vec2 center = mask.grid.cell_center(keep);
  for (const Vec2& u : confined) {
    CHECK(std::abs(u.x - center.x) <= 2.5);
    CHECK(std::abs(u.y - center.y) <= 2.5);
  }
}

TEST_CASE("empty green region is an error") {
  Scene scene;
  scene.bounds = {0, 0, 50, 50};
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  NetworkDeployment net;
  net.sensitivity_dbm = -90.0;
  net.maps.push_back(CoverageMap{mask.grid, Transmitter{{25, 25}, 15, 17, 3.5e9},
                                 std::vector<double>(mask.grid.cell_count(),
                                                     kUnreachedPathLossDb)});
  UeSimConfig cfg;
  CHECK_THROWS_AS(populate_users(net, mask, cfg), ValidationError);
}

TEST_CASE("identical networks compare to zero delta") {
  Scene scene;
  scene.bounds = {0, 0, 100, 100};
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  RayTracerConfig rt;
  rt.num_samples = 2000;
  const NetworkDeployment net =
      single_station_net(scene, mask, {50, 50}, 15.0, 17.0, -90.0, rt);
  UeSimConfig cfg;
  cfg.num_users = 1000;
  const NetworkComparison cmp = compare_networks(net, net, mask, cfg);
  CHECK(cmp.mean_delta_db == Catch::Approx(0.0).margin(1e-12));
  CHECK(cmp.stats_a.mean_dbm == Catch::Approx(cmp.stats_b.mean_dbm).margin(1e-12));
}

TEST_CASE("superset network never hurts any user") {
  const Scene scene = generate_synthetic_scene(SceneKind::kUniformCity,
                                               {{0, 0, 200, 200}, 0.3, 12.0, 28.0}, 6);
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  RayTracerConfig rt;
  rt.num_samples = 10000;
  rt.max_depth = 2;

  NetworkDeployment small;
  small.sensitivity_dbm = -90.0;
  small.maps.push_back(compute_coverage_map(scene, mask,
                                            Transmitter{{60, 60}, 15, 17, 3.5e9}, rt));
  NetworkDeployment big = small;
  big.maps.push_back(compute_coverage_map(scene, mask,
                                          Transmitter{{140, 140}, 15, 17, 3.5e9}, rt));
  big.maps.push_back(compute_coverage_map(scene, mask,
                                          Transmitter{{60, 140}, 15, 17, 3.5e9}, rt));

  UeSimConfig cfg;
  cfg.num_users = 2000;
  cfg.seed = 9;
  const NetworkComparison cmp = compare_networks(small, big, mask, cfg);
  CHECK(cmp.mean_delta_db >= 0.0);
  for (std::size_t u = 0; u < cmp.samples_a.size(); ++u) {
    REQUIRE(cmp.samples_b[u].required_tx_dbm <= cmp.samples_a[u].required_tx_dbm + 1e-12);
  }
}

TEST_CASE("stats: percentiles monotone, cdf sorted, infeasible accounting") {
  std::vector<UeSample> samples;
  for (int i = 0; i < 100; ++i) {
    UeSample s;
    s.required_tx_dbm = static_cast<double>(99 - i) * 0.3 - 10.0;
    s.feasible = s.required_tx_dbm <= 15.0;
    samples.push_back(s);
  }
  const TxPowerStats stats = tx_power_stats(samples);
  CHECK(stats.total_count == 100);
  CHECK(stats.feasible_count < 100);
  CHECK(stats.infeasible_fraction ==
        Catch::Approx(1.0 - static_cast<double>(stats.feasible_count) / 100.0));
  for (std::size_t k = 1; k < stats.cdf.size(); ++k) {
    REQUIRE(stats.cdf[k] >= stats.cdf[k - 1]);
  }
  for (std::size_t k = 1; k < stats.percentiles_dbm.size(); ++k) {
    REQUIRE(stats.percentiles_dbm[k] >= stats.percentiles_dbm[k - 1]);
  }
  CHECK(stats.median_dbm == stats.percentiles_dbm[2]);
}

TEST_CASE("macro versus dense femto network favors the dense network") {
  // A far-off corner macro against a 4x4 femto lattice: users sit about five
  // times closer to a femto, which buys more than the 10 dB sensitivity gap the
  // macro is granted.
  const Scene scene = generate_synthetic_scene(SceneKind::kUniformCity,
                                               {{0, 0, 300, 300}, 0.3, 10.0, 24.0}, 17);
  const CellMask mask = rasterize(scene, GridSpec{5.0, 1.5});
  RayTracerConfig rt;
  rt.num_samples = 15000;
  rt.max_depth = 3;

  NetworkDeployment macro;
  macro.sensitivity_dbm = -100.0;
  macro.maps.push_back(compute_coverage_map(scene, mask,
                                            Transmitter{{30, 30}, 50, 47, 3.5e9}, rt));
  NetworkDeployment femto;
  femto.sensitivity_dbm = -90.0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      femto.maps.push_back(compute_coverage_map(
          scene, mask, Transmitter{{37.5 + 75.0 * a, 37.5 + 75.0 * b}, 15, 17, 3.5e9}, rt));
    }
  }
  UeSimConfig cfg;
  cfg.num_users = 3000;
  cfg.seed = 4;
  const NetworkComparison cmp = compare_networks(macro, femto, mask, cfg);
  CHECK(cmp.mean_delta_db > 0.0);  // the dense network needs less uplink power
}
