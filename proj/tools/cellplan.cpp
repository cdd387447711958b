// cellplan: building-aware small-cell coverage planning.
//
// Subcommands: coverage, optimize, power, ue, ple, scene (generate | validate).
// Every command is a pure function of (config file, seed); --threads changes
// wall-clock only, never output bytes. Exit codes: 0 success, 1 compute-level
// failure with partial artifacts written, 2 config/validation failure with
// nothing written.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cellplan/export.hpp"
#include "cellplan/placement.hpp"
#include "cellplan/ple.hpp"
#include "cellplan/power.hpp"
#include "cellplan/propagation.hpp"
#include "cellplan/scene_io.hpp"
#include "cellplan/ue.hpp"
#include "cellplan/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cellplan;

namespace {

// Flips once a command passes validation and starts computing/writing, so main
// can map errors to the right exit code (2 = config stage, 1 = compute stage).
bool g_compute_phase = false;

struct SceneGenConfig {
  std::string kind = "empty";
  Rect bounds{0, 0, 300, 300};
  double density = 0.3;
  double height_min_m = 10.0;
  double height_max_m = 30.0;
  double block_m = 30.0;
  std::optional<std::uint64_t> seed;
};

struct StationConfig {
  std::optional<Vec2> position;
  double height_m = 15.0;
  double tx_power_dbm = 17.0;
  double frequency_hz = 3.5e9;
  double sensitivity_dbm = -90.0;
};

struct PlacementConfig {
  double candidate_spacing_m = 15.0;
  double overshoot_factor = 1.1;
  std::optional<double> target_ratio;  // overrides overshoot * e_m when set
  std::size_t uniform_k_max = 12;
  std::size_t hill_iters_per_station = 50;
  std::size_t brute_max_candidates = 20;
};

struct PowerConfig {
  double gamma = 3.0;
  std::vector<double> s_values{0.05, 0.01, 0.005, 0.0001};
  double base_tx_power_w = 100.0;
  double pa_efficiency = 0.4;
  int n_max = 16;
  std::vector<std::pair<std::string, std::size_t>> class_counts;
};

struct PleConfig {
  double max_radius_m = 250.0;
  double min_distance_m = 10.0;
  std::size_t min_samples = 30;
  double candidate_spacing_m = 30.0;
  std::string tx = "macro";  // which template drives the fit/heatmap
};

struct UeConfig {
  std::size_t num_users = 10000;
  double snr_margin_db = 15.0;
  double max_ue_power_dbm = 23.0;
  std::optional<std::uint64_t> seed;
};

struct AppConfig {
  std::optional<std::string> scene_path;
  std::optional<SceneGenConfig> scene_gen;
  GridSpec grid;
  RayTracerConfig tracer;
  bool tracer_seed_set = false;
  StationConfig macro{{}, 50.0, 47.0, 3.5e9, -100.0};
  StationConfig station{{}, 15.0, 17.0, 3.5e9, -90.0};
  PlacementConfig placement;
  PowerConfig power;
  PleConfig ple;
  UeConfig ue;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  fs::path config_dir;
};

Vec2 vec2_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) {
    throw ParseError(std::string("config: ") + what + " must be an [x, y] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Rect rect_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 4) {
    throw ParseError(std::string("config: ") + what +
                     " must be [x_min, y_min, x_max, y_max]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void read_station(const json& j, StationConfig& out) {
  if (j.contains("position")) out.position = vec2_from(j.at("position"), "position");
  out.height_m = j.value("height_m", out.height_m);
  out.tx_power_dbm = j.value("tx_power_dbm", out.tx_power_dbm);
  out.frequency_hz = j.value("frequency_hz", out.frequency_hz);
  out.sensitivity_dbm = j.value("sensitivity_dbm", out.sensitivity_dbm);
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("config file " + path + ": " + e.what());
  }

  AppConfig cfg;
  cfg.config_dir = fs::path(path).parent_path();
  try {
    if (j.contains("scene")) {
      const json& js = j.at("scene");
      if (js.contains("path")) cfg.scene_path = js.at("path").get<std::string>();
      if (js.contains("generate")) {
        SceneGenConfig gen;
        const json& jg = js.at("generate");
        gen.kind = jg.value("kind", gen.kind);
        if (jg.contains("bounds")) gen.bounds = rect_from(jg.at("bounds"), "scene.generate.bounds");
        gen.density = jg.value("density", gen.density);
        gen.height_min_m = jg.value("height_min_m", gen.height_min_m);
        gen.height_max_m = jg.value("height_max_m", gen.height_max_m);
        gen.block_m = jg.value("block_m", gen.block_m);
        if (jg.contains("seed")) gen.seed = jg.at("seed").get<std::uint64_t>();
        cfg.scene_gen = gen;
      }
    }
    if (j.contains("grid")) {
      cfg.grid.cell_size_m = j["grid"].value("cell_size_m", cfg.grid.cell_size_m);
      cfg.grid.receiver_height_m =
          j["grid"].value("receiver_height_m", cfg.grid.receiver_height_m);
    }
    if (j.contains("tracer")) {
      const json& jt = j.at("tracer");
      cfg.tracer.num_samples = jt.value("num_samples", cfg.tracer.num_samples);
      cfg.tracer.max_depth = jt.value("max_depth", cfg.tracer.max_depth);
      cfg.tracer.reflection_loss_db =
          jt.value("reflection_loss_db", cfg.tracer.reflection_loss_db);
      cfg.tracer.max_range_m = jt.value("max_range_m", cfg.tracer.max_range_m);
      cfg.tracer.stratified = jt.value("stratified", cfg.tracer.stratified);
      cfg.tracer.analytic_direct = jt.value("analytic_direct", cfg.tracer.analytic_direct);
      if (jt.contains("seed")) {
        cfg.tracer.seed = jt.at("seed").get<std::uint64_t>();
        cfg.tracer_seed_set = true;
      }
    }
    if (j.contains("macro")) read_station(j.at("macro"), cfg.macro);
    if (j.contains("station")) read_station(j.at("station"), cfg.station);
    if (j.contains("placement")) {
      const json& jp = j.at("placement");
      cfg.placement.candidate_spacing_m =
          jp.value("candidate_spacing_m", cfg.placement.candidate_spacing_m);
      cfg.placement.overshoot_factor =
          jp.value("overshoot_factor", cfg.placement.overshoot_factor);
      if (jp.contains("target_ratio")) {
        cfg.placement.target_ratio = jp.at("target_ratio").get<double>();
      }
      cfg.placement.uniform_k_max = jp.value("uniform_k_max", cfg.placement.uniform_k_max);
      cfg.placement.hill_iters_per_station =
          jp.value("hill_iters_per_station", cfg.placement.hill_iters_per_station);
      cfg.placement.brute_max_candidates =
          jp.value("brute_max_candidates", cfg.placement.brute_max_candidates);
    }
    if (j.contains("power")) {
      const json& jw = j.at("power");
      cfg.power.gamma = jw.value("gamma", cfg.power.gamma);
      if (jw.contains("s_values")) {
        cfg.power.s_values = jw.at("s_values").get<std::vector<double>>();
      }
      cfg.power.base_tx_power_w = jw.value("base_tx_power_w", cfg.power.base_tx_power_w);
      cfg.power.pa_efficiency = jw.value("pa_efficiency", cfg.power.pa_efficiency);
      cfg.power.n_max = jw.value("n_max", cfg.power.n_max);
      if (jw.contains("classes")) {
        for (const auto& jc : jw.at("classes")) {
          cfg.power.class_counts.emplace_back(jc.at(0).get<std::string>(),
                                              jc.at(1).get<std::size_t>());
        }
      }
    }
    if (j.contains("ple")) {
      const json& jp = j.at("ple");
      cfg.ple.max_radius_m = jp.value("max_radius_m", cfg.ple.max_radius_m);
      cfg.ple.min_distance_m = jp.value("min_distance_m", cfg.ple.min_distance_m);
      cfg.ple.min_samples = jp.value("min_samples", cfg.ple.min_samples);
      cfg.ple.candidate_spacing_m =
          jp.value("candidate_spacing_m", cfg.ple.candidate_spacing_m);
      cfg.ple.tx = jp.value("tx", cfg.ple.tx);
    }
    if (j.contains("ue")) {
      const json& ju = j.at("ue");
      cfg.ue.num_users = ju.value("num_users", cfg.ue.num_users);
      cfg.ue.snr_margin_db = ju.value("snr_margin_db", cfg.ue.snr_margin_db);
      cfg.ue.max_ue_power_dbm = ju.value("max_ue_power_dbm", cfg.ue.max_ue_power_dbm);
      if (ju.contains("seed")) cfg.ue.seed = ju.at("seed").get<std::uint64_t>();
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
  } catch (const json::exception& e) {
    throw ParseError("config file " + path + ": " + e.what());
  }
  return cfg;
}

/// Seeds left unset in the config inherit the global seed.
void resolve_seeds(AppConfig& cfg) {
  if (!cfg.tracer_seed_set) cfg.tracer.seed = cfg.seed;
  if (cfg.scene_gen && !cfg.scene_gen->seed) cfg.scene_gen->seed = cfg.seed;
  if (!cfg.ue.seed) cfg.ue.seed = cfg.seed;
}

Scene build_scene(const AppConfig& cfg, std::vector<std::string>* warnings) {
  if (cfg.scene_path) {
    fs::path p(*cfg.scene_path);
    if (p.is_relative()) p = cfg.config_dir / p;
    return load_scene(p.string(), warnings);
  }
  if (cfg.scene_gen) {
    const SceneGenConfig& g = *cfg.scene_gen;
    return generate_synthetic_scene(
        scene_kind_from_string(g.kind),
        SyntheticSceneParams{g.bounds, g.density, g.height_min_m, g.height_max_m, g.block_m},
        *g.seed);
  }
  throw ValidationError("config: either scene.path or scene.generate is required");
}

json station_json(const StationConfig& s) {
  json j{{"height_m", s.height_m},
         {"tx_power_dbm", s.tx_power_dbm},
         {"frequency_hz", s.frequency_hz},
         {"sensitivity_dbm", s.sensitivity_dbm}};
  if (s.position) j["position"] = {s.position->x, s.position->y};
  return j;
}

json config_echo(const AppConfig& cfg) {
  json j;
  if (cfg.scene_path) j["scene"]["path"] = *cfg.scene_path;
  if (cfg.scene_gen) {
    const SceneGenConfig& g = *cfg.scene_gen;
    j["scene"]["generate"] = {{"kind", g.kind},
                              {"bounds", {g.bounds.x_min, g.bounds.y_min, g.bounds.x_max,
                                          g.bounds.y_max}},
                              {"density", g.density},
                              {"height_min_m", g.height_min_m},
                              {"height_max_m", g.height_max_m},
                              {"block_m", g.block_m},
                              {"seed", *g.seed}};
  }
  j["grid"] = {{"cell_size_m", cfg.grid.cell_size_m},
               {"receiver_height_m", cfg.grid.receiver_height_m}};
  j["tracer"] = {{"num_samples", cfg.tracer.num_samples},
                 {"max_depth", cfg.tracer.max_depth},
                 {"reflection_loss_db", cfg.tracer.reflection_loss_db},
                 {"max_range_m", cfg.tracer.max_range_m},
                 {"stratified", cfg.tracer.stratified},
                 {"analytic_direct", cfg.tracer.analytic_direct},
                 {"seed", cfg.tracer.seed}};
  j["macro"] = station_json(cfg.macro);
  j["station"] = station_json(cfg.station);
  j["seed"] = cfg.seed;
  return j;
}

class PhaseTimer {
 public:
  void start(const std::string& name) {
    name_ = name;
    begin_ = std::chrono::steady_clock::now();
  }
  void stop() {
    const auto end = std::chrono::steady_clock::now();
    timings_[name_] =
        std::chrono::duration_cast<std::chrono::milliseconds>(end - begin_).count();
  }
  json to_json() const { return json(timings_); }

 private:
  std::string name_;
  std::chrono::steady_clock::time_point begin_;
  std::map<std::string, std::int64_t> timings_;
};

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output file: " + path.string());
  out << content;
}

void write_report(const fs::path& out_dir, const std::string& command, const AppConfig& cfg,
                  const json& outputs, const PhaseTimer& timer) {
  json report{{"tool", "cellplan"},
              {"version", kVersion},
              {"command", command},
              {"config", config_echo(cfg)},
              {"outputs", outputs},
              {"timings_ms", timer.to_json()}};
  write_text(out_dir / "report.json", report.dump(2) + "\n");
}

Transmitter transmitter_from(const StationConfig& s, const char* which) {
  if (!s.position) {
    throw ValidationError(std::string("config: ") + which + ".position is required");
  }
  return Transmitter{*s.position, s.height_m, s.tx_power_dbm, s.frequency_hz};
}

std::vector<Vec2> sites_from_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open sites file: " + path.string());
  json j;
  try {
    in >> j;
    std::vector<Vec2> sites;
    for (const auto& js : j.at("sites")) {
      sites.push_back({js.at(0).get<double>(), js.at(1).get<double>()});
    }
    return sites;
  } catch (const json::exception& e) {
    throw ParseError("sites file " + path.string() + ": " + e.what());
  }
}

/// Coverage maps for a list of same-template stations; outer parallelism.
std::vector<CoverageMap> maps_for_sites(const Scene& scene, const CellMask& mask,
                                        const StationConfig& st, const RayTracerConfig& rt,
                                        const std::vector<Vec2>& sites, unsigned threads) {
  std::vector<CoverageMap> maps(sites.size());
  parallel_chunks(sites.size(), threads, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      maps[k] = compute_coverage_map(
          scene, mask, Transmitter{sites[k], st.height_m, st.tx_power_dbm, st.frequency_hz},
          rt, 1);
    }
  });
  return maps;
}

int cmd_coverage(const AppConfig& cfg, const fs::path& out_dir, const std::string& tx_kind) {
  PhaseTimer timer;
  timer.start("scene");
  std::vector<std::string> warnings;
  const Scene scene = build_scene(cfg, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  const CellMask mask = rasterize(scene, cfg.grid);
  const StationConfig& st = tx_kind == "station" ? cfg.station : cfg.macro;
  const Transmitter tx = transmitter_from(st, tx_kind.c_str());
  timer.stop();
  g_compute_phase = true;

  fs::create_directories(out_dir);
  timer.start("coverage");
  const CoverageMap map = compute_coverage_map(scene, mask, tx, cfg.tracer, cfg.threads);
  timer.stop();

  timer.start("write");
  std::ostringstream csv;
  write_coverage_csv(csv, map, mask);
  write_text(out_dir / "coverage.csv", csv.str());
  std::ostringstream pgm;
  write_coverage_pgm(pgm, map, mask);
  write_text(out_dir / "coverage.pgm", pgm.str());
  timer.stop();

  write_report(out_dir, "coverage", cfg, json::array({"coverage.csv", "coverage.pgm"}),
               timer);
  std::cout << "coverage map: " << mask.grid.width << "x" << mask.grid.height
            << " cells written to " << out_dir.string() << "\n";
  return 0;
}

int cmd_optimize(const AppConfig& cfg, const fs::path& out_dir, const std::string& algorithm) {
  PhaseTimer timer;
  timer.start("scene");
  std::vector<std::string> warnings;
  const Scene scene = build_scene(cfg, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

  PlacementProblem problem;
  problem.scene = scene;
  problem.mask = rasterize(scene, cfg.grid);
  problem.station = StationTemplate{cfg.station.height_m, cfg.station.tx_power_dbm,
                                    cfg.station.frequency_hz};
  problem.sensitivity_dbm = cfg.station.sensitivity_dbm;
  problem.candidate_spacing_m = cfg.placement.candidate_spacing_m;
  problem.overshoot_factor = cfg.placement.overshoot_factor;
  problem.tracer = cfg.tracer;
  const Transmitter macro = transmitter_from(cfg.macro, "macro");
  timer.stop();
  g_compute_phase = true;

  fs::create_directories(out_dir);
  timer.start("macro_reference");
  const MacroReference ref =
      macro_reference(problem, macro, cfg.macro.sensitivity_dbm, cfg.threads);
  timer.stop();
  problem.target_ratio = cfg.placement.target_ratio
                             ? std::min(1.0, *cfg.placement.target_ratio)
                             : std::min(1.0, cfg.placement.overshoot_factor * ref.e_m);

  timer.start("candidates");
  const CandidateCache cache = build_candidates(problem, cfg.threads);
  timer.stop();

  timer.start("optimize");
  PlacementSolution solution;
  if (algorithm == "greedy") {
    solution = greedy_placement(problem, cache);
  } else if (algorithm == "hill") {
    solution = hill_climb_placement(problem, cache, cfg.placement.hill_iters_per_station,
                                    cfg.seed);
  } else if (algorithm == "uniform") {
    solution = uniform_placement(problem, cache, cfg.placement.uniform_k_max);
  } else if (algorithm == "brute") {
    solution = brute_force_placement(problem, cache, cfg.placement.brute_max_candidates);
  } else {
    throw ValidationError("unknown algorithm: " + algorithm);
  }
  timer.stop();

  timer.start("write");
  std::vector<CoverageSet> chosen_sets;
  for (const std::size_t idx : solution.site_indices) chosen_sets.push_back(cache.sets[idx]);
  const OverlapBlind ob = overlap_and_blind(chosen_sets, ref.reference, problem.mask);

  json jsol{{"algorithm", placement_algorithm_name(solution.algorithm)},
            {"e_m", ref.e_m},
            {"target_ratio", problem.target_ratio},
            {"overshoot_factor", problem.overshoot_factor},
            {"final_ratio", solution.final_ratio},
            {"target_reached", solution.target_reached},
            {"station_count", solution.sites.size()},
            {"evaluations", solution.evaluations},
            {"overlap_ratio", ob.overlap_ratio},
            {"blind_ratio", ob.blind_ratio},
            {"ratio_curve", solution.ratio_curve}};
  json jsites = json::array();
  for (const Vec2& s : solution.sites) jsites.push_back({s.x, s.y});
  jsol["sites"] = jsites;
  if (!solution.k_ratios.empty()) jsol["k_ratios"] = solution.k_ratios;
  const std::string stem = "solution_" + algorithm;
  write_text(out_dir / (stem + ".json"), jsol.dump(2) + "\n");

  std::ostringstream curve;
  write_ratio_curve_csv(curve, solution);
  write_text(out_dir / ("ratio_curve_" + algorithm + ".csv"), curve.str());

  std::ostringstream overlay;
  write_overlay_pgm(overlay, chosen_sets, ref.reference, problem.mask);
  write_text(out_dir / ("overlay_" + algorithm + ".pgm"), overlay.str());
  timer.stop();

  write_report(out_dir, "optimize", cfg,
               json::array({stem + ".json", "ratio_curve_" + algorithm + ".csv",
                            "overlay_" + algorithm + ".pgm"}),
               timer);

  std::cout << algorithm << ": " << solution.sites.size() << " stations, coverage "
            << fixed6(solution.final_ratio) << " (target " << fixed6(problem.target_ratio)
            << ", macro e_m " << fixed6(ref.e_m) << ")\n";
  if (!solution.target_reached) {
    std::cerr << "error: target coverage unreachable; saturated solution written\n";
    return 1;
  }
  return 0;
}

int cmd_power(const AppConfig& cfg, const fs::path& out_dir) {
  PhaseTimer timer;
  g_compute_phase = true;
  timer.start("power");
  fs::create_directories(out_dir);
  json outputs = json::array();

  for (const double s : cfg.power.s_values) {
    DensificationParams p{cfg.power.gamma, s, cfg.power.base_tx_power_w,
                          cfg.power.pa_efficiency};
    std::vector<int> ns;
    std::vector<double> ratios;
    const double reference = net_power_w(1, p);
    for (int n = 1; n <= cfg.power.n_max; ++n) {
      ns.push_back(n);
      ratios.push_back(net_power_w(n, p) / reference);
    }
    std::ostringstream csv;
    write_power_sweep_csv(csv, ns, ratios);
    const std::string name = "power_sweep_s" + fixed6(s) + ".csv";
    write_text(out_dir / name, csv.str());
    outputs.push_back(name);
  }

  // Class table and any requested class x count totals.
  std::ostringstream classes;
  classes << "class,tx_power_dbm,tx_power_w,total_power_w,typical_height_m\n";
  for (const StationClass& c : kStationClasses) {
    classes << c.name << ',' << fixed6(c.tx_power_dbm) << ','
            << fixed6(dbm_to_watts(c.tx_power_dbm)) << ',' << fixed6(c.total_power_w) << ',';
    if (c.typical_height_m) {
      classes << fixed6(*c.typical_height_m);
    } else {
      classes << "unspecified";
    }
    classes << '\n';
  }
  write_text(out_dir / "power_classes.csv", classes.str());
  outputs.push_back("power_classes.csv");

  json jtotals = json::array();
  for (const auto& [name, count] : cfg.power.class_counts) {
    const StationClass& c = station_class(name);
    jtotals.push_back({{"class", name},
                       {"count", count},
                       {"total_w", network_total_power_w(c, count)},
                       {"ratio_vs_single_macro",
                        network_total_power_w(c, count) /
                            network_total_power_w(station_class("macro"), 1)}});
  }

  DensificationParams headline{cfg.power.gamma,
                               cfg.power.s_values.empty() ? 0.01 : cfg.power.s_values.front(),
                               cfg.power.base_tx_power_w, cfg.power.pa_efficiency};
  json jopt = json::array();
  for (const double s : cfg.power.s_values) {
    DensificationParams p = headline;
    p.s = s;
    const DensificationOptimum opt = optimal_densification(p, cfg.power.n_max);
    json jo{{"s", s}, {"n_star", opt.n_star}, {"net_power_w", opt.power_w}};
    if (opt.continuous_n_star) jo["continuous_n_star"] = *opt.continuous_n_star;
    if (opt.crossover_n) jo["crossover_n"] = *opt.crossover_n;
    jopt.push_back(jo);
  }
  timer.stop();

  json report_extra{{"pa_input_power_w",
                     pa_input_power_w(dbm_to_watts(47.0), cfg.power.pa_efficiency)},
                    {"optima", jopt},
                    {"class_totals", jtotals}};
  json report{{"tool", "cellplan"},       {"version", kVersion},
              {"command", "power"},       {"config", config_echo(cfg)},
              {"outputs", outputs},       {"power", report_extra},
              {"timings_ms", timer.to_json()}};
  write_text(out_dir / "report.json", report.dump(2) + "\n");

  for (const auto& jo : jopt) {
    std::cout << "s=" << jo.at("s").get<double>()
              << " n*=" << jo.at("n_star").get<int>() << "\n";
  }
  return 0;
}

int cmd_ue(const AppConfig& cfg, const fs::path& out_dir, const std::string& sites_a,
           const std::string& sites_b) {
  PhaseTimer timer;
  timer.start("scene");
  std::vector<std::string> warnings;
  const Scene scene = build_scene(cfg, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  const CellMask mask = rasterize(scene, cfg.grid);

  // Site lists are config inputs: resolve and parse them before compute starts.
  auto resolve_sites = [&](const std::string& spec) -> std::optional<std::vector<Vec2>> {
    if (spec == "macro") return std::nullopt;
    fs::path p(spec);
    if (p.is_relative() && !fs::exists(p)) p = cfg.config_dir / spec;
    return sites_from_file(p);
  };
  const auto parsed_a = resolve_sites(sites_a);
  const auto parsed_b = resolve_sites(sites_b);
  if (sites_a == "macro" || sites_b == "macro") {
    transmitter_from(cfg.macro, "macro");  // surface a missing position now
  }
  timer.stop();
  g_compute_phase = true;

  auto deployment = [&](const std::optional<std::vector<Vec2>>& sites) {
    NetworkDeployment net;
    if (!sites) {
      net.sensitivity_dbm = cfg.macro.sensitivity_dbm;
      net.maps.push_back(compute_coverage_map(scene, mask,
                                              transmitter_from(cfg.macro, "macro"),
                                              cfg.tracer, cfg.threads));
    } else {
      net.sensitivity_dbm = cfg.station.sensitivity_dbm;
      net.maps = maps_for_sites(scene, mask, cfg.station, cfg.tracer, *sites, cfg.threads);
    }
    return net;
  };

  fs::create_directories(out_dir);
  timer.start("networks");
  const NetworkDeployment net_a = deployment(parsed_a);
  const NetworkDeployment net_b = deployment(parsed_b);
  timer.stop();

  timer.start("users");
  UeSimConfig ue_cfg{cfg.ue.num_users, cfg.ue.snr_margin_db, cfg.ue.max_ue_power_dbm,
                     *cfg.ue.seed};
  const NetworkComparison cmp = compare_networks(net_a, net_b, mask, ue_cfg);
  timer.stop();

  timer.start("write");
  std::ostringstream ua, ub, ca, cb;
  write_ue_samples_csv(ua, cmp.samples_a);
  write_ue_samples_csv(ub, cmp.samples_b);
  write_cdf_csv(ca, cmp.stats_a);
  write_cdf_csv(cb, cmp.stats_b);
  write_text(out_dir / "ue_a.csv", ua.str());
  write_text(out_dir / "ue_b.csv", ub.str());
  write_text(out_dir / "cdf_a.csv", ca.str());
  write_text(out_dir / "cdf_b.csv", cb.str());

  auto stats_json = [](const TxPowerStats& s) {
    return json{{"mean_dbm", s.mean_dbm},
                {"median_dbm", s.median_dbm},
                {"p5", s.percentiles_dbm[0]},
                {"p25", s.percentiles_dbm[1]},
                {"p50", s.percentiles_dbm[2]},
                {"p75", s.percentiles_dbm[3]},
                {"p95", s.percentiles_dbm[4]},
                {"infeasible_fraction", s.infeasible_fraction},
                {"feasible_count", s.feasible_count},
                {"total_count", s.total_count}};
  };
  json summary{{"network_a", sites_a},
               {"network_b", sites_b},
               {"stats_a", stats_json(cmp.stats_a)},
               {"stats_b", stats_json(cmp.stats_b)},
               {"mean_delta_db", cmp.mean_delta_db},
               {"paired_feasible_count", cmp.paired_feasible_count}};
  write_text(out_dir / "ue_summary.json", summary.dump(2) + "\n");
  timer.stop();

  json report{{"tool", "cellplan"},
              {"version", kVersion},
              {"command", "ue"},
              {"config", config_echo(cfg)},
              {"outputs", json::array({"ue_a.csv", "ue_b.csv", "cdf_a.csv", "cdf_b.csv",
                                       "ue_summary.json"})},
              {"ue", summary},
              {"timings_ms", timer.to_json()}};
  write_text(out_dir / "report.json", report.dump(2) + "\n");

  std::cout << "mean required tx: a=" << fixed6(cmp.stats_a.mean_dbm)
            << " dBm, b=" << fixed6(cmp.stats_b.mean_dbm)
            << " dBm, paired delta=" << fixed6(cmp.mean_delta_db) << " dB\n";
  return 0;
}

int cmd_ple(const AppConfig& cfg, const fs::path& out_dir, const std::string& mode) {
  PhaseTimer timer;
  timer.start("scene");
  std::vector<std::string> warnings;
  const Scene scene = build_scene(cfg, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  const CellMask mask = rasterize(scene, cfg.grid);
  const StationConfig& st = cfg.ple.tx == "station" ? cfg.station : cfg.macro;
  timer.stop();
  g_compute_phase = true;

  fs::create_directories(out_dir);
  if (mode == "fit") {
    timer.start("fit");
    const Transmitter tx = transmitter_from(st, cfg.ple.tx.c_str());
    const CoverageMap map = compute_coverage_map(scene, mask, tx, cfg.tracer, cfg.threads);
    const auto samples =
        samples_from_coverage(map, mask, cfg.ple.max_radius_m, cfg.ple.min_distance_m);
    const PathLossFit fit = fit_ple(samples);
    timer.stop();

    timer.start("write");
    std::ostringstream csv;
    write_samples_csv(csv, samples);
    write_text(out_dir / "ple_samples.csv", csv.str());
    json jfit{{"k_db", fit.k_db},
              {"gamma", fit.gamma},
              {"rmse_db", fit.rmse_db},
              {"n", fit.sample_count}};
    write_text(out_dir / "ple_fit.json", jfit.dump(2) + "\n");
    timer.stop();

    write_report(out_dir, "ple", cfg, json::array({"ple_samples.csv", "ple_fit.json"}),
                 timer);
    std::cout << jfit.dump() << "\n";
    return 0;
  }
  if (mode == "heatmap") {
    timer.start("heatmap");
    std::vector<Vec2> candidates;
    for (const Candidate& c : candidate_grid(mask, cfg.ple.candidate_spacing_m)) {
      candidates.push_back(c.position);
    }
    Transmitter tx_template{{0, 0}, st.height_m, st.tx_power_dbm, st.frequency_hz};
    const PleHeatmap heatmap =
        ple_heatmap(scene, mask, candidates, tx_template, cfg.tracer, cfg.ple.max_radius_m,
                    cfg.ple.min_samples, cfg.ple.min_distance_m, cfg.threads);
    timer.stop();

    timer.start("write");
    std::ostringstream csv;
    write_ple_heatmap_csv(csv, heatmap);
    write_text(out_dir / "ple_heatmap.csv", csv.str());
    std::ostringstream pgm;
    write_ple_heatmap_pgm(pgm, heatmap, mask.grid);
    write_text(out_dir / "ple_heatmap.pgm", pgm.str());
    timer.stop();

    write_report(out_dir, "ple", cfg, json::array({"ple_heatmap.csv", "ple_heatmap.pgm"}),
                 timer);
    std::size_t fitted = 0;
    for (const PleCell& c : heatmap.cells) {
      if (c.status == PleStatus::kOk) ++fitted;
    }
    std::cout << "heatmap: " << fitted << "/" << heatmap.cells.size()
              << " candidates fitted\n";
    return 0;
  }
  throw ValidationError("unknown ple mode: " + mode);
}

int cmd_scene_generate(const SceneGenConfig& gen, const fs::path& out_file) {
  const Scene scene = generate_synthetic_scene(
      scene_kind_from_string(gen.kind),
      SyntheticSceneParams{gen.bounds, gen.density, gen.height_min_m, gen.height_max_m,
                           gen.block_m},
      gen.seed.value_or(1));
  save_scene(scene, out_file.string());
  std::cout << "wrote " << out_file.string() << " (" << scene.buildings.size()
            << " buildings)\n";
  return 0;
}

int cmd_scene_validate(const std::string& path) {
  std::vector<std::string> warnings;
  const Scene scene = load_scene(path, &warnings);
  for (const auto& w : warnings) std::cout << "warning: " << w << "\n";
  std::cout << "ok: " << scene.buildings.size() << " buildings, bounds ["
            << fixed6(scene.bounds.x_min) << ", " << fixed6(scene.bounds.y_min) << ", "
            << fixed6(scene.bounds.x_max) << ", " << fixed6(scene.bounds.y_max) << "]\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"building-aware small-cell coverage planner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed_flag;
  std::optional<unsigned> threads_flag;

  auto add_common = [&](CLI::App* cmd, bool config_required = true) {
    cmd->add_option("--config", config_path, "run configuration file (JSON)")
        ->required(config_required);
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed_flag, "override the global seed");
    cmd->add_option("--threads", threads_flag, "worker threads (0 = all cores)");
  };

  auto* coverage = app.add_subcommand("coverage", "compute one transmitter's coverage map");
  std::string tx_kind = "macro";
  std::vector<double> at_flag;
  add_common(coverage);
  coverage->add_option("--tx", tx_kind, "which template to place: macro | station")
      ->check(CLI::IsMember({"macro", "station"}));
  coverage->add_option("--at", at_flag, "transmitter position override: X Y")->expected(2);

  auto* optimize = app.add_subcommand("optimize", "solve min-station placement");
  std::string algorithm = "greedy";
  add_common(optimize);
  optimize->add_option("--algorithm", algorithm, "greedy | hill | uniform | brute")
      ->check(CLI::IsMember({"greedy", "hill", "uniform", "brute"}));

  auto* power = app.add_subcommand("power", "analytic densification power models");
  add_common(power);

  auto* ue = app.add_subcommand("ue", "paired user-equipment uplink power comparison");
  std::string sites_a = "macro";
  std::string sites_b;
  add_common(ue);
  ue->add_option("--sites-a", sites_a, "network A: 'macro' or a solution JSON file");
  ue->add_option("--sites-b", sites_b, "network B: 'macro' or a solution JSON file")
      ->required();

  auto* ple = app.add_subcommand("ple", "path-loss exponent fitting");
  std::string ple_mode = "fit";
  add_common(ple);
  ple->add_option("--mode", ple_mode, "fit | heatmap")
      ->check(CLI::IsMember({"fit", "heatmap"}));

  auto* scene_cmd = app.add_subcommand("scene", "scene file utilities");
  scene_cmd->require_subcommand(1);
  auto* generate = scene_cmd->add_subcommand("generate", "write a synthetic scene");
  SceneGenConfig gen;
  std::string gen_out = "scene.json";
  std::uint64_t gen_seed = 1;
  std::vector<double> gen_bounds{0, 0, 300, 300};
  generate->add_option("--kind", gen.kind, "empty | uniform-city | asymmetric-city");
  generate->add_option("--bounds", gen_bounds, "X_MIN Y_MIN X_MAX Y_MAX")->expected(4);
  generate->add_option("--density", gen.density, "footprint area fraction per block");
  generate->add_option("--height-min", gen.height_min_m, "minimum building height (m)");
  generate->add_option("--height-max", gen.height_max_m, "maximum building height (m)");
  generate->add_option("--block", gen.block_m, "city block pitch (m)");
  generate->add_option("--seed", gen_seed, "generator seed");
  generate->add_option("--out", gen_out, "output scene file");

  auto* validate = scene_cmd->add_subcommand("validate", "check a scene file");
  std::string validate_path;
  validate->add_option("path", validate_path, "scene file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) {
      gen.bounds = Rect{gen_bounds[0], gen_bounds[1], gen_bounds[2], gen_bounds[3]};
      gen.seed = gen_seed;
      return cmd_scene_generate(gen, gen_out);
    }
    if (validate->parsed()) {
      return cmd_scene_validate(validate_path);
    }

    AppConfig cfg = load_config(config_path);
    if (seed_flag) cfg.seed = *seed_flag;
    if (threads_flag) cfg.threads = *threads_flag;
    resolve_seeds(cfg);

    if (coverage->parsed()) {
      if (at_flag.size() == 2) {
        (tx_kind == "station" ? cfg.station : cfg.macro).position =
            Vec2{at_flag[0], at_flag[1]};
      }
      return cmd_coverage(cfg, out_dir, tx_kind);
    }
    if (optimize->parsed()) return cmd_optimize(cfg, out_dir, algorithm);
    if (power->parsed()) return cmd_power(cfg, out_dir);
    if (ue->parsed()) return cmd_ue(cfg, out_dir, sites_a, sites_b);
    if (ple->parsed()) return cmd_ple(cfg, out_dir, ple_mode);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return g_compute_phase ? 1 : 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return g_compute_phase ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
