#pragma once

#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "navskills/hashing.hpp"
#include "navskills/mapgen.hpp"
#include "navskills/world.hpp"

namespace navskills {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bump when the on-disk layout below changes shape.
inline constexpr int kWorldFormatVersion = 1;

inline nlohmann::json grid_json(const Grid& g) {
  return nlohmann::json{{"width", g.width()},
                        {"height", g.height()},
                        {"cell_size", g.cell_size()},
                        {"rle", g.rle_encode()}};
}

inline Grid grid_from_json(const nlohmann::json& j) {
  try {
    return Grid::rle_decode(j.at("width").get<int>(), j.at("height").get<int>(),
                            j.at("cell_size").get<double>(), j.at("rle").get<std::string>());
  } catch (const std::exception& e) {
    throw IoError(std::string("grid parse: ") + e.what());
  }
}

inline nlohmann::json pose_json(const Pose& p) { return nlohmann::json{p.x, p.y, p.theta}; }

inline Pose pose_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw IoError("pose must be [x, y, theta]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json vec2_json(const Vec2& v) { return nlohmann::json{v.x, v.y}; }

inline Vec2 vec2_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw IoError("point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline nlohmann::json world_json(const World& w) {
  nlohmann::json circles = nlohmann::json::array();
  for (const auto& c : w.static_circles)
    circles.push_back({{"center", vec2_json(c.center)}, {"radius", c.radius}});
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : w.agents) {
    nlohmann::json wp = nlohmann::json::array();
    for (const auto& p : a.waypoints) wp.push_back(vec2_json(p));
    agents.push_back({{"pose", pose_json(a.pose)},
                      {"radius", a.radius},
                      {"speed_pref", a.speed_pref},
                      {"waypoints", wp},
                      {"rng_state", a.rng.state()}});
  }
  nlohmann::json j{{"version", kWorldFormatVersion},
                   {"static_circles", circles},
                   {"agents", agents},
                   {"robot",
                    {{"pose", pose_json(w.robot.pose)},
                     {"radius", w.robot.radius},
                     {"v", w.robot.v},
                     {"w", w.robot.w}}},
                   {"goal", vec2_json(w.goal)},
                   {"time_step_index", w.time_step_index}};
  if (w.grid) j["grid"] = grid_json(*w.grid);
  if (w.plan_grid) j["plan_grid"] = grid_json(*w.plan_grid);
  return j;
}

inline World world_from_json(const nlohmann::json& j) {
  World w;
  try {
    int version = j.at("version").get<int>();
    if (version != kWorldFormatVersion)
      throw IoError("unsupported world format version " + std::to_string(version));
    if (j.contains("grid")) w.grid = std::make_shared<Grid>(grid_from_json(j.at("grid")));
    if (j.contains("plan_grid"))
      w.plan_grid = std::make_shared<Grid>(grid_from_json(j.at("plan_grid")));
    for (const auto& c : j.at("static_circles"))
      w.static_circles.push_back({vec2_from_json(c.at("center")), c.at("radius").get<double>()});
    for (const auto& a : j.at("agents")) {
      DynamicAgent agent;
      agent.pose = pose_from_json(a.at("pose"));
      agent.radius = a.at("radius").get<double>();
      agent.speed_pref = a.at("speed_pref").get<double>();
      for (const auto& p : a.at("waypoints")) agent.waypoints.push_back(vec2_from_json(p));
      agent.rng.set_state(a.at("rng_state").get<std::uint64_t>());
      w.agents.push_back(std::move(agent));
    }
    const auto& r = j.at("robot");
    w.robot.pose = pose_from_json(r.at("pose"));
    w.robot.radius = r.at("radius").get<double>();
    w.robot.v = r.at("v").get<double>();
    w.robot.w = r.at("w").get<double>();
    w.goal = vec2_from_json(j.at("goal"));
    w.time_step_index = j.at("time_step_index").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("world parse: ") + e.what());
  }
  return w;
}

inline nlohmann::json scenario_json(const Scenario& sc) {
  return nlohmann::json{{"world", world_json(sc.world)},
                        {"start", pose_json(sc.start)},
                        {"goal", vec2_json(sc.goal)},
                        {"min_start_goal_sep", sc.min_start_goal_sep}};
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario sc;
  try {
    sc.world = world_from_json(j.at("world"));
    sc.start = pose_from_json(j.at("start"));
    sc.goal = vec2_from_json(j.at("goal"));
    sc.min_start_goal_sep = j.at("min_start_goal_sep").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("scenario parse: ") + e.what());
  }
  return sc;
}

inline void save_scenario(const std::string& path, const Scenario& sc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write scenario to " + path);
  out << scenario_json(sc).dump(2) << '\n';
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scenario from " + path);
  try {
    nlohmann::json j;
    in >> j;
    return scenario_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("scenario parse: ") + e.what());
  }
}

// Digest over the canonical JSON rendering: stable across processes, equal
// iff every field (including agent RNG states) is equal.
inline std::uint64_t scenario_fingerprint(const Scenario& sc) {
  return fnv1a64(scenario_json(sc).dump());
}

}  // namespace navskills
