#pragma once

#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "navskills/hashing.hpp"
#include "navskills/mapgen.hpp"
#include "navskills/nets.hpp"
#include "navskills/rewards.hpp"
#include "navskills/sac.hpp"

namespace navskills {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-component uniform sampling box for phase-1 skills.
struct SkillDistribution {
  std::array<double, SkillVector::dim> lo{};
  std::array<double, SkillVector::dim> hi{0.2, 0.2, 0.2, 0.2, 0.2};
  double w_max = 0.2;

  void validate() const {
    for (int i = 0; i < SkillVector::dim; ++i) {
      if (!(lo[i] <= hi[i]))
        throw ConfigError("SkillDistribution: lo > hi at component " + std::to_string(i));
      if (lo[i] < 0.0 || hi[i] > w_max)
        throw ConfigError("SkillDistribution: bounds outside [0, w_max] at component " +
                          std::to_string(i));
    }
  }
};

inline SkillVector sample_skill(const SkillDistribution& dist, Rng& rng) {
  dist.validate();
  SkillVector s;
  for (int i = 0; i < SkillVector::dim; ++i)
    s[i] = dist.lo[i] == dist.hi[i] ? dist.lo[i] : rng.uniform(dist.lo[i], dist.hi[i]);
  return s;
}

// One entry of the training/eval scenario list: either a named pinned
// scenario or a generated map described inline.
struct ScenarioSpec {
  std::string name;  // "corridor" | "building" | "mall"; empty -> use map
  MapSpec map;
  ScenarioOptions opts;
};

inline Scenario make_scenario(const ScenarioSpec& spec, std::uint64_t episode_seed) {
  if (!spec.name.empty()) return build_named_scenario(spec.name, episode_seed);
  return build_scenario(spec.map, spec.opts, mix64(spec.map.seed) ^ mix64(episode_seed + 1));
}

struct PhaseConfig {
  int phase = 1;
  std::vector<ScenarioSpec> scenarios;
  long total_steps = 100000;
  long eval_every = 0;  // env steps between eval snapshots; 0 = no eval
  int eval_episodes = 20;
  std::uint64_t seed = 1;
  double dt = 0.1;
  int episode_cap = 1000;
  double scan_noise = 0.0;
  MdpConfig mdp;
  NetShape shape;  // trunk dims; aux/action dims are set per phase
  SacConfig sac;
  std::size_t buffer_capacity = 100000;
  int batch_size = 64;
  long warmup_steps = 1000;
  int updates_per_step = 1;
  SkillDistribution skills;                                // phase-1 sampling box
  std::vector<std::string> eval_skills{"goal_oriented"};   // presets scored at eval
  bool her = true;      // phase 2: relabel finished episodes
  int her_k = 4;
  bool her_low = false;  // optional phase-1 goal relabeling
  std::string low_checkpoint;  // phase 2: frozen low-level policy
  std::string out_dir = "runs";
  std::string run_name;  // empty -> p<phase>-<confighash>-s<seed>

  void validate() const {
    if (phase != 1 && phase != 2) throw ConfigError("PhaseConfig: phase must be 1 or 2");
    if (scenarios.empty()) throw ConfigError("PhaseConfig: scenario list is empty");
    if (total_steps < 0) throw ConfigError("PhaseConfig: negative total_steps");
    if (episode_cap < 1) throw ConfigError("PhaseConfig: episode_cap must be >= 1");
    if (batch_size < 1) throw ConfigError("PhaseConfig: batch_size must be >= 1");
    if (buffer_capacity == 0) throw ConfigError("PhaseConfig: zero buffer capacity");
    if (updates_per_step < 0) throw ConfigError("PhaseConfig: negative updates_per_step");
    if (her_k < 0) throw ConfigError("PhaseConfig: negative her_k");
    if (dt <= 0.0) throw ConfigError("PhaseConfig: dt must be positive");
    skills.validate();
    for (const auto& name : eval_skills) named_skill(name);  // throws on unknown
  }
};

namespace detail {

using json = nlohmann::json;

inline json to_json(const MapSpec& m) {
  return json{{"kind", m.kind == MapSpec::Kind::indoor ? "indoor" : "outdoor"},
              {"width", m.width},
              {"height", m.height},
              {"n_static", m.n_static},
              {"n_dynamic", m.n_dynamic},
              {"n_corridors", m.n_corridors},
              {"corridor_width", m.corridor_width},
              {"cell_size", m.cell_size},
              {"seed", m.seed}};
}

inline MapSpec map_from_json(const json& j) {
  MapSpec m;
  std::string kind = j.value("kind", "indoor");
  if (kind == "indoor") {
    m.kind = MapSpec::Kind::indoor;
  } else if (kind == "outdoor") {
    m.kind = MapSpec::Kind::outdoor;
  } else {
    throw ConfigError("map spec: unknown kind " + kind);
  }
  m.width = j.value("width", m.width);
  m.height = j.value("height", m.height);
  m.n_static = j.value("n_static", m.n_static);
  m.n_dynamic = j.value("n_dynamic", m.n_dynamic);
  m.n_corridors = j.value("n_corridors", m.n_corridors);
  m.corridor_width = j.value("corridor_width", m.corridor_width);
  m.cell_size = j.value("cell_size", m.cell_size);
  m.seed = j.value("seed", m.seed);
  return m;
}

inline json to_json(const ScenarioOptions& o) {
  return json{{"robot_radius", o.robot_radius},
              {"min_start_goal_sep", o.min_start_goal_sep},
              {"agent_radius", o.agent_radius},
              {"agent_speed_lo", o.agent_speed_lo},
              {"agent_speed_hi", o.agent_speed_hi},
              {"start_clearance", o.start_clearance}};
}

inline ScenarioOptions opts_from_json(const json& j) {
  ScenarioOptions o;
  o.robot_radius = j.value("robot_radius", o.robot_radius);
  o.min_start_goal_sep = j.value("min_start_goal_sep", o.min_start_goal_sep);
  o.agent_radius = j.value("agent_radius", o.agent_radius);
  o.agent_speed_lo = j.value("agent_speed_lo", o.agent_speed_lo);
  o.agent_speed_hi = j.value("agent_speed_hi", o.agent_speed_hi);
  o.start_clearance = j.value("start_clearance", o.start_clearance);
  return o;
}

inline json to_json(const ScenarioSpec& s) {
  json j;
  if (!s.name.empty()) j["name"] = s.name;
  j["map"] = to_json(s.map);
  j["options"] = to_json(s.opts);
  return j;
}

inline ScenarioSpec scenario_from_json(const json& j) {
  ScenarioSpec s;
  s.name = j.value("name", "");
  if (j.contains("map")) s.map = map_from_json(j.at("map"));
  if (j.contains("options")) s.opts = opts_from_json(j.at("options"));
  return s;
}

}  // namespace detail

inline nlohmann::json phase_config_json(const PhaseConfig& c) {
  using nlohmann::json;
  json j;
  j["phase"] = c.phase;
  json scen = json::array();
  for (const auto& s : c.scenarios) scen.push_back(detail::to_json(s));
  j["scenarios"] = scen;
  j["total_steps"] = c.total_steps;
  j["eval_every"] = c.eval_every;
  j["eval_episodes"] = c.eval_episodes;
  j["seed"] = c.seed;
  j["dt"] = c.dt;
  j["episode_cap"] = c.episode_cap;
  j["scan_noise"] = c.scan_noise;
  j["mdp"] = json{{"v_min", c.mdp.limits.v_min},
                  {"v_max", c.mdp.limits.v_max},
                  {"w_abs", c.mdp.limits.w_abs},
                  {"goal_radius", c.mdp.goal_radius},
                  {"w_max", c.mdp.w_max},
                  {"max_range", c.mdp.max_range},
                  {"n_rays", c.mdp.n_rays}};
  j["net"] = json{{"c1f", c.shape.c1f},   {"c1k", c.shape.c1k}, {"c1s", c.shape.c1s},
                  {"c2f", c.shape.c2f},   {"c2k", c.shape.c2k}, {"c2s", c.shape.c2s},
                  {"fc_scan", c.shape.fc_scan}, {"fc_merge", c.shape.fc_merge}};
  j["sac"] = json{{"lr_actor", c.sac.lr_actor},
                  {"lr_critic", c.sac.lr_critic},
                  {"lr_alpha", c.sac.lr_alpha},
                  {"tau", c.sac.tau},
                  {"gamma", c.sac.gamma},
                  {"init_alpha", c.sac.init_alpha},
                  {"target_entropy", c.sac.target_entropy}};
  j["buffer_capacity"] = c.buffer_capacity;
  j["batch_size"] = c.batch_size;
  j["warmup_steps"] = c.warmup_steps;
  j["updates_per_step"] = c.updates_per_step;
  j["skills"] = nlohmann::json{{"lo", c.skills.lo}, {"hi", c.skills.hi}, {"w_max", c.skills.w_max}};
  j["eval_skills"] = c.eval_skills;
  j["her"] = c.her;
  j["her_k"] = c.her_k;
  j["her_low"] = c.her_low;
  j["low_checkpoint"] = c.low_checkpoint;
  return j;
}

inline PhaseConfig phase_config_from_json(const nlohmann::json& j) {
  PhaseConfig c;
  try {
    c.phase = j.value("phase", c.phase);
    if (j.contains("scenarios"))
      for (const auto& s : j.at("scenarios")) c.scenarios.push_back(detail::scenario_from_json(s));
    c.total_steps = j.value("total_steps", c.total_steps);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
    c.seed = j.value("seed", c.seed);
    c.dt = j.value("dt", c.dt);
    c.episode_cap = j.value("episode_cap", c.episode_cap);
    c.scan_noise = j.value("scan_noise", c.scan_noise);
    if (j.contains("mdp")) {
      const auto& m = j.at("mdp");
      c.mdp.limits.v_min = m.value("v_min", c.mdp.limits.v_min);
      c.mdp.limits.v_max = m.value("v_max", c.mdp.limits.v_max);
      c.mdp.limits.w_abs = m.value("w_abs", c.mdp.limits.w_abs);
      c.mdp.goal_radius = m.value("goal_radius", c.mdp.goal_radius);
      c.mdp.w_max = m.value("w_max", c.mdp.w_max);
      c.mdp.max_range = m.value("max_range", c.mdp.max_range);
      c.mdp.n_rays = m.value("n_rays", c.mdp.n_rays);
    }
    if (j.contains("net")) {
      const auto& n = j.at("net");
      c.shape.c1f = n.value("c1f", c.shape.c1f);
      c.shape.c1k = n.value("c1k", c.shape.c1k);
      c.shape.c1s = n.value("c1s", c.shape.c1s);
      c.shape.c2f = n.value("c2f", c.shape.c2f);
      c.shape.c2k = n.value("c2k", c.shape.c2k);
      c.shape.c2s = n.value("c2s", c.shape.c2s);
      c.shape.fc_scan = n.value("fc_scan", c.shape.fc_scan);
      c.shape.fc_merge = n.value("fc_merge", c.shape.fc_merge);
    }
    if (j.contains("sac")) {
      const auto& s = j.at("sac");
      c.sac.lr_actor = s.value("lr_actor", c.sac.lr_actor);
      c.sac.lr_critic = s.value("lr_critic", c.sac.lr_critic);
      c.sac.lr_alpha = s.value("lr_alpha", c.sac.lr_alpha);
      c.sac.tau = s.value("tau", c.sac.tau);
      c.sac.gamma = s.value("gamma", c.sac.gamma);
      c.sac.init_alpha = s.value("init_alpha", c.sac.init_alpha);
      c.sac.target_entropy = s.value("target_entropy", c.sac.target_entropy);
    }
    c.buffer_capacity = j.value("buffer_capacity", c.buffer_capacity);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.updates_per_step = j.value("updates_per_step", c.updates_per_step);
    if (j.contains("skills")) {
      const auto& s = j.at("skills");
      if (s.contains("lo")) c.skills.lo = s.at("lo").get<std::array<double, SkillVector::dim>>();
      if (s.contains("hi")) c.skills.hi = s.at("hi").get<std::array<double, SkillVector::dim>>();
      c.skills.w_max = s.value("w_max", c.skills.w_max);
    }
    if (j.contains("eval_skills"))
      c.eval_skills = j.at("eval_skills").get<std::vector<std::string>>();
    c.her = j.value("her", c.her);
    c.her_k = j.value("her_k", c.her_k);
    c.her_low = j.value("her_low", c.her_low);
    c.low_checkpoint = j.value("low_checkpoint", c.low_checkpoint);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.run_name = j.value("run_name", c.run_name);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  return c;
}

// Hash of the resolved experiment config. Output locations are excluded so
// moving a run directory does not change the experiment's identity.
inline std::uint64_t config_hash(const PhaseConfig& c) {
  std::string dump = phase_config_json(c).dump();
  return fnv1a64(dump.data(), dump.size());
}

inline PhaseConfig load_phase_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  PhaseConfig c = phase_config_from_json(j);
  c.validate();
  return c;
}

inline void save_phase_config(const std::string& path, const PhaseConfig& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("config: cannot write " + path);
  out << phase_config_json(c).dump(2) << '\n';
}

}  // namespace navskills
