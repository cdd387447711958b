#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cellplan/errors.hpp"
#include "cellplan/scene.hpp"

namespace cellplan {

// Scene file format: UTF-8 JSON with top-level keys `bounds` ([x_min, y_min,
// x_max, y_max]), `buildings` ([{"footprint": [[x, y], ...], "height_m": h}, ...])
// and `name`. save_scene emits the canonical form (alphabetically sorted keys,
// 6-decimal fixed-point coordinates), so round trips are byte-exact.

inline std::string format_coordinate(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string scene_to_canonical_json(const Scene& scene) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"bounds\": [" << format_coordinate(scene.bounds.x_min) << ", "
      << format_coordinate(scene.bounds.y_min) << ", " << format_coordinate(scene.bounds.x_max)
      << ", " << format_coordinate(scene.bounds.y_max) << "],\n";
  out << "  \"buildings\": [";
  for (std::size_t b = 0; b < scene.buildings.size(); ++b) {
    const Building& building = scene.buildings[b];
    out << (b == 0 ? "\n" : ",\n");
    out << "    {\n      \"footprint\": [";
    for (std::size_t v = 0; v < building.footprint.size(); ++v) {
      if (v > 0) out << ", ";
      out << "[" << format_coordinate(building.footprint[v].x) << ", "
          << format_coordinate(building.footprint[v].y) << "]";
    }
    out << "],\n      \"height_m\": " << format_coordinate(building.height_m) << "\n    }";
  }
  out << (scene.buildings.empty() ? "],\n" : "\n  ],\n");
  out << "  \"name\": " << nlohmann::json(scene.name).dump() << "\n";
  out << "}\n";
  return out.str();
}

inline Scene scene_from_json(const nlohmann::json& j,
                             std::vector<std::string>* warnings = nullptr) {
  Scene scene;
  try {
    if (!j.is_object()) throw ParseError("scene file: top level must be an object");
    const auto& bounds = j.at("bounds");
    if (!bounds.is_array() || bounds.size() != 4) {
      throw ParseError("scene file: `bounds` must be [x_min, y_min, x_max, y_max]");
    }
    scene.bounds = Rect{bounds[0].get<double>(), bounds[1].get<double>(),
                        bounds[2].get<double>(), bounds[3].get<double>()};
    scene.name = j.value("name", std::string{});
    if (j.contains("buildings")) {
      const auto& buildings = j.at("buildings");
      if (!buildings.is_array()) throw ParseError("scene file: `buildings` must be an array");
      for (std::size_t b = 0; b < buildings.size(); ++b) {
        const auto& jb = buildings[b];
        Building building;
        building.height_m = jb.at("height_m").get<double>();
        for (const auto& jv : jb.at("footprint")) {
          if (!jv.is_array() || jv.size() != 2) {
            throw ParseError("scene file: building " + std::to_string(b) +
                             ": footprint vertices must be [x, y] pairs");
          }
          building.footprint.push_back({jv[0].get<double>(), jv[1].get<double>()});
        }
        scene.buildings.push_back(std::move(building));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scene file: ") + e.what());
  }
  validate_scene(scene, warnings);
  return scene;
}

inline Scene load_scene(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scene file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("scene file " + path + ": " + e.what());
  }
  return scene_from_json(j, warnings);
}

inline void save_scene(const Scene& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open scene file for writing: " + path);
  out << scene_to_canonical_json(scene);
  if (!out) throw ParseError("failed writing scene file: " + path);
}

}  // namespace cellplan
