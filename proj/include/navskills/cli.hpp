#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "navskills/dwa.hpp"
#include "navskills/eval.hpp"
#include "navskills/io.hpp"
#include "navskills/svg.hpp"

namespace navskills::cli {

inline constexpr const char* kOutRootEnv = "NAVSKILLS_OUT";

// Flag beats the environment override, which beats the built-in/config default.
inline std::string resolve_out(const std::string& flag, const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutRootEnv); env != nullptr && *env != '\0') return env;
  return fallback;
}

inline void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Eval suite files

inline nlohmann::json suite_json(const EvalSuite& s) {
  nlohmann::json scen = nlohmann::json::array();
  for (const auto& sp : s.scenarios) scen.push_back(detail::to_json(sp));
  return nlohmann::json{{"scenarios", scen},
                        {"n_episodes", s.n_episodes},
                        {"seed", s.seed},
                        {"stochastic", s.stochastic},
                        {"env",
                         {{"dt", s.env.dt},
                          {"scan_noise", s.env.scan_noise},
                          {"mdp",
                           {{"v_min", s.env.mdp.limits.v_min},
                            {"v_max", s.env.mdp.limits.v_max},
                            {"w_abs", s.env.mdp.limits.w_abs},
                            {"goal_radius", s.env.mdp.goal_radius},
                            {"time_cap", s.env.mdp.time_cap},
                            {"w_max", s.env.mdp.w_max},
                            {"max_range", s.env.mdp.max_range},
                            {"n_rays", s.env.mdp.n_rays}}}}}};
}

inline EvalSuite suite_from_json(const nlohmann::json& j) {
  EvalSuite s;
  try {
    if (j.contains("scenarios"))
      for (const auto& e : j.at("scenarios")) s.scenarios.push_back(detail::scenario_from_json(e));
    s.n_episodes = j.value("n_episodes", s.n_episodes);
    s.seed = j.value("seed", s.seed);
    s.stochastic = j.value("stochastic", s.stochastic);
    if (j.contains("env")) {
      const auto& e = j.at("env");
      s.env.dt = e.value("dt", s.env.dt);
      s.env.scan_noise = e.value("scan_noise", s.env.scan_noise);
      if (e.contains("mdp")) {
        const auto& m = e.at("mdp");
        s.env.mdp.limits.v_min = m.value("v_min", s.env.mdp.limits.v_min);
        s.env.mdp.limits.v_max = m.value("v_max", s.env.mdp.limits.v_max);
        s.env.mdp.limits.w_abs = m.value("w_abs", s.env.mdp.limits.w_abs);
        s.env.mdp.goal_radius = m.value("goal_radius", s.env.mdp.goal_radius);
        s.env.mdp.time_cap = m.value("time_cap", s.env.mdp.time_cap);
        s.env.mdp.w_max = m.value("w_max", s.env.mdp.w_max);
        s.env.mdp.max_range = m.value("max_range", s.env.mdp.max_range);
        s.env.mdp.n_rays = m.value("n_rays", s.env.mdp.n_rays);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw EvalError(std::string("suite parse: ") + e.what());
  }
  if (s.scenarios.empty()) throw EvalError("suite: scenario list is empty");
  return s;
}

inline EvalSuite load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EvalError("cannot read suite from " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw EvalError(path + ": " + e.what());
  }
  return suite_from_json(j);
}

// ---------------------------------------------------------------------------
// Policy references: "dwa" | "fixed:<preset>" | "hierarchy"

struct PolicyBundle {
  std::shared_ptr<ActorNet<float>> low, high;
  std::unique_ptr<ActorSkillSource<float>> source;
  std::unique_ptr<Policy> policy;
  bool emits_skills = false;
};

inline PolicyBundle make_policy(const std::string& ref, const EvalSuite& suite,
                                const std::string& low_ckpt, const std::string& high_ckpt) {
  PolicyBundle b;
  if (ref == "dwa") {
    DwaParams p;
    p.limits = suite.env.mdp.limits;
    p.goal_tolerance = suite.env.mdp.goal_radius;
    if (!suite.scenarios.empty()) p.robot_radius = suite.scenarios.front().opts.robot_radius;
    b.policy = std::make_unique<DwaPolicy>(p, suite.env.mdp.max_range);
    return b;
  }
  if (ref.rfind("fixed:", 0) == 0) {
    if (low_ckpt.empty()) throw EvalError("policy '" + ref + "' needs --low <checkpoint>");
    SkillVector skill = named_skill(ref.substr(6));
    LoadedActor low = load_actor_auto(low_ckpt);
    if (!low.enc.with_skill)
      throw EvalError(low_ckpt + ": not a skill-conditioned low-level checkpoint");
    b.low = low.net;
    b.policy = std::make_unique<FixedSkillPolicy<float>>(skill, b.low.get(), low.enc);
    b.emits_skills = true;
    return b;
  }
  if (ref == "hierarchy") {
    if (low_ckpt.empty() || high_ckpt.empty())
      throw EvalError("policy 'hierarchy' needs --low and --high checkpoints");
    LoadedActor low = load_actor_auto(low_ckpt);
    LoadedActor high = load_actor_auto(high_ckpt);
    if (!low.enc.with_skill)
      throw EvalError(low_ckpt + ": not a skill-conditioned low-level checkpoint");
    if (high.enc.with_skill) throw EvalError(high_ckpt + ": not a high-level checkpoint");
    b.low = low.net;
    b.high = high.net;
    b.source = std::make_unique<ActorSkillSource<float>>(b.high.get(), high.enc);
    b.policy = std::make_unique<HierarchicalPolicy<float>>(b.source.get(), b.low.get(), low.enc);
    b.emits_skills = true;
    return b;
  }
  throw EvalError("unknown policy '" + ref + "' (use dwa, fixed:<preset>, or hierarchy)");
}

// ---------------------------------------------------------------------------
// gen-maps

struct GenMapsOptions {
  std::string spec_path;  // --config
  std::string out;        // --out
  std::uint64_t seed = 0;
  bool has_seed = false;
};

inline int cmd_gen_maps(const GenMapsOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(opt.spec_path);
    if (!in) throw IoError("cannot read spec from " + opt.spec_path);
    nlohmann::json j;
    in >> j;

    int count = j.value("count", 1);
    std::uint64_t seed = opt.has_seed ? opt.seed : j.value("seed", std::uint64_t{0});
    std::vector<ScenarioSpec> specs;
    if (j.contains("scenarios"))
      for (const auto& e : j.at("scenarios")) specs.push_back(detail::scenario_from_json(e));
    if (count < 1) throw IoError("gen-maps: count must be >= 1");
    if (specs.empty()) throw IoError("gen-maps: scenario list is empty");

    std::filesystem::path dir = resolve_out(opt.out, "maps");
    std::filesystem::create_directories(dir);

    nlohmann::json resolved = nlohmann::json::object();
    resolved["command"] = "gen-maps";
    resolved["count"] = count;
    resolved["seed"] = seed;
    resolved["scenarios"] = nlohmann::json::array();
    for (const auto& s : specs) resolved["scenarios"].push_back(detail::to_json(s));
    write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");

    for (int i = 0; i < count; ++i) {
      Scenario sc = make_scenario(specs[static_cast<std::size_t>(i) % specs.size()],
                                  eval_episode_seed(seed, i));
      char stem[32];
      std::snprintf(stem, sizeof(stem), "map_%03d", i);
      save_scenario((dir / (std::string(stem) + ".json")).string(), sc);
      write_text(dir / (std::string(stem) + ".svg"), svg::map_svg(sc.world));
    }
    out << "wrote " << count << " scenario(s) to " << dir.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "gen-maps: " << e.what() << '\n';
    return 1;
  }
}

// ---------------------------------------------------------------------------
// train-low / train-high

struct TrainOptions {
  std::string config_path;  // --config
  std::string out;          // --out, overrides config out_dir
  std::string low;          // --low, overrides config low_checkpoint
  std::string resume_from;  // --resume
  long steps = -1;          // --steps, overrides config total_steps when >= 0
  std::uint64_t seed = 0;
  bool has_seed = false;
  const std::atomic<bool>* stop = nullptr;
};

inline int cmd_train(int phase, const TrainOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    PhaseConfig cfg = load_phase_config(opt.config_path);
    if (cfg.phase != phase)
      throw ConfigError(opt.config_path + ": config is for phase " + std::to_string(cfg.phase) +
                        ", command trains phase " + std::to_string(phase));
    if (opt.has_seed) cfg.seed = opt.seed;
    if (opt.steps >= 0) cfg.total_steps = opt.steps;
    if (!opt.low.empty()) cfg.low_checkpoint = opt.low;
    cfg.out_dir = resolve_out(opt.out, cfg.out_dir);

    TrainResult res = train(cfg, opt.resume_from, opt.stop, &out);
    out << "run " << res.run_dir << '\n';
    out << "checkpoint " << res.checkpoint_path << " (step " << res.steps << ", episode "
        << res.episodes << ", updates " << res.updates << ")\n";
    if (res.diverged) {
      err << "train: aborted on non-finite values; last finite checkpoint kept\n";
      return 1;
    }
    if (res.interrupted) out << "interrupted; checkpoint flushed\n";
    return 0;
  } catch (const std::exception& e) {
    err << "train: " << e.what() << '\n';
    return 1;
  }
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string suite_path;  // --config
  std::string policy = "dwa";
  std::string low, high;  // checkpoints
  std::string out;
  std::uint64_t seed = 0;
  bool has_seed = false;
};

inline int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    EvalSuite suite = load_suite(opt.suite_path);
    if (opt.has_seed) suite.seed = opt.seed;
    PolicyBundle pb = make_policy(opt.policy, suite, opt.low, opt.high);

    std::filesystem::path dir = resolve_out(opt.out, "eval_out");
    std::filesystem::create_directories(dir);

    EvalOutput r = run_eval(suite, *pb.policy, true);

    nlohmann::json resolved{{"command", "eval"},
                            {"policy", opt.policy},
                            {"low", opt.low},
                            {"high", opt.high},
                            {"suite", suite_json(suite)}};
    write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
    write_episode_records((dir / "records.jsonl").string(), r.records);
    write_text(dir / "metrics.json", metrics_json(r.metrics).dump(2) + "\n");
    write_text(dir / "metrics.txt", format_metrics(r.metrics) + "\n");

    if (pb.emits_skills) {
      SkillTraceSummary ts = skill_trace_summary(r.logs);
      nlohmann::json sj{{"mean", ts.mean}, {"stddev", ts.stddev}, {"steps", ts.steps}};
      write_text(dir / "skill_summary.json", sj.dump(2) + "\n");
      write_text(dir / "skill_bars.svg",
                 svg::skill_bars_svg(ts.mean, ts.stddev, suite.env.mdp.w_max));
    }
    out << format_metrics(r.metrics) << '\n';
    out << "records " << (dir / "records.jsonl").string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "eval: " << e.what() << '\n';
    return 1;
  }
}

// ---------------------------------------------------------------------------
// replay

struct ReplayOptions {
  std::string records_path;  // episode records from a previous eval
  std::string suite_path;    // --config, the suite those records came from
  std::string policy = "dwa";
  std::string low, high;
  std::string out;
  long episode = 0;
};

inline int cmd_replay(const ReplayOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    std::vector<EpisodeRecord> records = read_episode_records(opt.records_path);
    const EpisodeRecord* rec = nullptr;
    for (const auto& r : records)
      if (r.episode == opt.episode) rec = &r;
    if (rec == nullptr)
      throw EvalError(opt.records_path + ": no record for episode " +
                      std::to_string(opt.episode));

    EvalSuite suite = load_suite(opt.suite_path);
    PolicyBundle pb = make_policy(opt.policy, suite, opt.low, opt.high);

    std::uint64_t es = eval_episode_seed(suite.seed, rec->episode);
    if (es != rec->scenario_seed)
      throw EvalError("record episode " + std::to_string(rec->episode) +
                      " was produced under a different suite seed");

    // Mirror run_eval's episode construction exactly.
    Scenario sc = make_scenario(
        suite.scenarios[static_cast<std::size_t>(rec->episode) % suite.scenarios.size()], es);
    World start_world = sc.world;
    Pose start_pose = sc.start;
    NavEnv env(std::move(sc), suite.env, mix64(es + 17), rec->episode);
    Rng action_rng(mix64(es + 29));
    EpisodeLog log = run_episode(env, *pb.policy, suite.stochastic ? &action_rng : nullptr);

    Pose final_pose = log.steps.empty() ? start_pose : log.steps.back().pose;
    if (final_pose.x != rec->final_pose.x || final_pose.y != rec->final_pose.y ||
        final_pose.theta != rec->final_pose.theta || log.length() != rec->steps ||
        done_name(log.outcome) != rec->outcome)
      throw EvalError("replay diverged from record (policy or suite does not match)");

    std::vector<Pose> traj;
    traj.push_back(start_pose);
    for (const auto& st : log.steps) traj.push_back(st.pose);
    std::vector<std::array<double, 5>> skills;
    for (const auto& st : log.steps)
      if (st.has_skill) skills.push_back(st.skill.as_array());

    std::filesystem::path dir = resolve_out(opt.out, "replay_out");
    std::filesystem::create_directories(dir);
    nlohmann::json resolved{{"command", "replay"},
                            {"records", opt.records_path},
                            {"episode", rec->episode},
                            {"policy", opt.policy},
                            {"low", opt.low},
                            {"high", opt.high},
                            {"suite", suite_json(suite)}};
    write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
    char name[32];
    std::snprintf(name, sizeof(name), "replay_ep%03ld.svg", rec->episode);
    write_text(dir / name,
               svg::trajectory_svg(start_world, traj, skills.empty() ? nullptr : &skills,
                                   suite.env.mdp.w_max));

    out << "episode " << rec->episode << " outcome " << rec->outcome << " steps " << rec->steps
        << " final pose (" << final_pose.x << ", " << final_pose.y << ", " << final_pose.theta
        << ")\n";
    out << "trajectory " << (dir / name).string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "replay: " << e.what() << '\n';
    return 1;
  }
}

// ---------------------------------------------------------------------------
// plot-telemetry

struct PlotOptions {
  std::string telemetry_path;
  std::string out;
};

inline int cmd_plot_telemetry(const PlotOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(opt.telemetry_path);
    if (!in) throw IoError("cannot read telemetry from " + opt.telemetry_path);

    svg::Series ret_low{"return_low", {}}, ret_high{"return_high", {}};
    svg::Series critic{"critic1", {}}, actor{"actor", {}}, alpha{"alpha", {}};
    std::map<std::string, svg::Series> evals;  // one curve per eval key
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
      if (!line.empty()) {
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
          throw IoError(opt.telemetry_path + ": corrupt telemetry at byte " +
                        std::to_string(offset) + ": " + e.what());
        }
        std::string type = j.value("type", "");
        double step = j.value("step", 0.0);
        if (type == "episode") {
          ret_low.points.push_back({step, j.value("return_low", 0.0)});
          ret_high.points.push_back({step, j.value("return_high", 0.0)});
        } else if (type == "step" && j.contains("actor")) {
          critic.points.push_back({step, j.value("critic1", 0.0)});
          actor.points.push_back({step, j.value("actor", 0.0)});
          alpha.points.push_back({step, j.value("alpha", 0.0)});
        } else if (type == "eval") {
          if (j.contains("success_rate")) {
            auto& s = evals["success"];
            s.label = "success";
            s.points.push_back({step, j.value("success_rate", 0.0)});
          } else if (j.contains("success") && j.at("success").is_object()) {
            for (const auto& [k, v] : j.at("success").items()) {
              auto& s = evals[k];
              s.label = k;
              s.points.push_back({step, v.get<double>()});
            }
          }
        }
      }
      offset += line.size() + 1;
    }
    if (ret_low.points.empty() && critic.points.empty() && evals.empty())
      throw IoError(opt.telemetry_path + ": no telemetry lines");

    std::filesystem::path dir = resolve_out(opt.out, "plots");
    std::filesystem::create_directories(dir);
    nlohmann::json resolved{{"command", "plot-telemetry"}, {"telemetry", opt.telemetry_path}};
    write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");

    int plots = 0;
    if (!ret_low.points.empty()) {
      write_text(dir / "telemetry_returns.svg",
                 svg::curves_svg({ret_low, ret_high}, "episode returns", "env step", "return"));
      ++plots;
    }
    if (!critic.points.empty()) {
      write_text(dir / "telemetry_losses.svg",
                 svg::curves_svg({critic, actor, alpha}, "losses", "env step", "loss"));
      ++plots;
    }
    if (!evals.empty()) {
      std::vector<svg::Series> es;
      for (auto& [k, s] : evals) es.push_back(std::move(s));
      write_text(dir / "telemetry_eval.svg",
                 svg::curves_svg(es, "eval success", "env step", "success rate"));
      ++plots;
    }
    out << "wrote " << plots << " plot(s) to " << dir.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "plot-telemetry: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace navskills::cli
