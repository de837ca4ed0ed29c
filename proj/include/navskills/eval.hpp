#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "navskills/config.hpp"
#include "navskills/env.hpp"
#include "navskills/rollout.hpp"
#include "navskills/train.hpp"

namespace navskills {

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The paper's four metrics plus outcome counts. Time and path length are
// averaged over successful episodes only; rates are count / episodes.
struct Metrics {
  int episodes = 0;
  int n_success = 0;
  int n_collision = 0;
  int n_timeout = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
  double mean_time_to_goal = 0.0;  // seconds
  double mean_path_length = 0.0;   // meters
};

struct EpisodeRecord {
  long episode = 0;
  std::uint64_t scenario_seed = 0;
  std::string outcome;  // goal | collision | timeout
  int steps = 0;
  double duration = 0.0;     // seconds
  double path_length = 0.0;  // meters
  double start_goal_dist = 0.0;
  double min_clearance = 0.0;
  double mean_abs_w = 0.0;
  double mean_v = 0.0;
  Pose final_pose{};  // replay target
};

inline Metrics metrics_from_records(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw EvalError("metrics_from_records: no records");
  Metrics m;
  m.episodes = static_cast<int>(records.size());
  double time_sum = 0.0, path_sum = 0.0;
  for (const auto& r : records) {
    if (r.outcome == "goal") {
      ++m.n_success;
      time_sum += r.duration;
      path_sum += r.path_length;
    } else if (r.outcome == "collision") {
      ++m.n_collision;
    } else if (r.outcome == "timeout") {
      ++m.n_timeout;
    } else {
      throw EvalError("metrics_from_records: unknown outcome " + r.outcome);
    }
  }
  m.success_rate = static_cast<double>(m.n_success) / m.episodes;
  m.collision_rate = static_cast<double>(m.n_collision) / m.episodes;
  m.timeout_rate = static_cast<double>(m.n_timeout) / m.episodes;
  if (m.n_success > 0) {
    m.mean_time_to_goal = time_sum / m.n_success;
    m.mean_path_length = path_sum / m.n_success;
  }
  return m;
}

inline nlohmann::json record_json(const EpisodeRecord& r) {
  return nlohmann::json{{"episode", r.episode},
                        {"scenario_seed", r.scenario_seed},
                        {"outcome", r.outcome},
                        {"steps", r.steps},
                        {"duration", r.duration},
                        {"path_length", r.path_length},
                        {"start_goal_dist", r.start_goal_dist},
                        {"min_clearance", r.min_clearance},
                        {"mean_abs_w", r.mean_abs_w},
                        {"mean_v", r.mean_v},
                        {"final_pose", {r.final_pose.x, r.final_pose.y, r.final_pose.theta}}};
}

inline EpisodeRecord record_from_json(const nlohmann::json& j) {
  EpisodeRecord r;
  try {
    r.episode = j.at("episode").get<long>();
    r.scenario_seed = j.at("scenario_seed").get<std::uint64_t>();
    r.outcome = j.at("outcome").get<std::string>();
    r.steps = j.at("steps").get<int>();
    r.duration = j.at("duration").get<double>();
    r.path_length = j.at("path_length").get<double>();
    r.start_goal_dist = j.at("start_goal_dist").get<double>();
    r.min_clearance = j.at("min_clearance").get<double>();
    r.mean_abs_w = j.at("mean_abs_w").get<double>();
    r.mean_v = j.at("mean_v").get<double>();
    const auto& fp = j.at("final_pose");
    if (!fp.is_array() || fp.size() != 3) throw EvalError("final_pose must be [x, y, theta]");
    r.final_pose = {fp[0].get<double>(), fp[1].get<double>(), fp[2].get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw EvalError(std::string("episode record parse: ") + e.what());
  }
  return r;
}

inline void write_episode_records(const std::string& path,
                                  const std::vector<EpisodeRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EvalError("cannot write records to " + path);
  for (const auto& r : records) out << record_json(r).dump() << '\n';
}

inline std::vector<EpisodeRecord> read_episode_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EvalError("cannot read records from " + path);
  std::vector<EpisodeRecord> out;
  std::string line;
  std::size_t offset = 0;  // byte offset of the current line start
  while (std::getline(in, line)) {
    if (!line.empty()) {
      try {
        out.push_back(record_from_json(nlohmann::json::parse(line)));
      } catch (const std::exception& e) {
        throw EvalError(path + ": corrupt episode record at byte " + std::to_string(offset) +
                        ": " + e.what());
      }
    }
    offset += line.size() + 1;
  }
  return out;
}

struct EvalSuite {
  std::vector<ScenarioSpec> scenarios;  // cycled across episodes
  EnvConfig env;
  int n_episodes = 10;
  std::uint64_t seed = 0;
  bool stochastic = false;  // sample actions instead of taking the mean
};

struct EvalOutput {
  Metrics metrics;
  std::vector<EpisodeRecord> records;
  std::vector<EpisodeLog> logs;  // filled when keep_logs is set
};

inline std::uint64_t eval_episode_seed(std::uint64_t seed, long episode) {
  return mix64(mix64(seed) + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(episode + 1));
}

// Runs the suite with per-episode derived seeds and aggregates the metrics.
// Policy errors (for example a scan-width mismatch) surface as EvalError with
// the failing episode attached.
inline EvalOutput run_eval(const EvalSuite& suite, Policy& policy, bool keep_logs = false) {
  if (suite.n_episodes < 1) throw EvalError("run_eval: n_episodes must be >= 1");
  if (suite.scenarios.empty()) throw EvalError("run_eval: empty scenario list");
  EvalOutput out;
  out.records.reserve(suite.n_episodes);
  for (long e = 0; e < suite.n_episodes; ++e) {
    std::uint64_t es = eval_episode_seed(suite.seed, e);
    Scenario sc = make_scenario(suite.scenarios[static_cast<std::size_t>(e) %
                                                suite.scenarios.size()],
                                es);
    double start_goal = (sc.goal - sc.start.position()).norm();
    Pose start_pose = sc.start;
    NavEnv env(std::move(sc), suite.env, mix64(es + 17), e);
    Rng action_rng(mix64(es + 29));
    EpisodeLog log;
    try {
      log = run_episode(env, policy, suite.stochastic ? &action_rng : nullptr);
    } catch (const ShapeError& err) {
      throw EvalError("run_eval: episode " + std::to_string(e) +
                      ": policy/scenario mismatch: " + err.what());
    } catch (const GraphError& err) {
      throw EvalError("run_eval: episode " + std::to_string(e) +
                      ": policy/scenario mismatch: " + err.what());
    } catch (const PolicyError& err) {
      throw EvalError("run_eval: episode " + std::to_string(e) +
                      ": policy/scenario mismatch: " + err.what());
    }
    EpisodeRecord r;
    r.episode = e;
    r.scenario_seed = es;
    r.outcome = done_name(log.outcome);
    r.steps = log.length();
    r.duration = log.duration();
    r.path_length = log.path_length;
    r.start_goal_dist = start_goal;
    r.min_clearance = log.min_clearance();
    r.mean_abs_w = log.mean_abs_w();
    r.mean_v = log.mean_v();
    r.final_pose = log.steps.empty() ? start_pose : log.steps.back().pose;
    out.records.push_back(std::move(r));
    if (keep_logs) out.logs.push_back(std::move(log));
  }
  out.metrics = metrics_from_records(out.records);
  return out;
}

inline nlohmann::json metrics_json(const Metrics& m) {
  return nlohmann::json{{"episodes", m.episodes},
                        {"n_success", m.n_success},
                        {"n_collision", m.n_collision},
                        {"n_timeout", m.n_timeout},
                        {"success_rate", m.success_rate},
                        {"collision_rate", m.collision_rate},
                        {"timeout_rate", m.timeout_rate},
                        {"mean_time_to_goal", m.mean_time_to_goal},
                        {"mean_path_length", m.mean_path_length}};
}

// Plain-text summary table. Means are over successful episodes only.
inline std::string format_metrics(const Metrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "episodes %d | success %.3f | collision %.3f | timeout %.3f | "
                "time-to-goal %.2fs | path %.2fm (means over successes)",
                m.episodes, m.success_rate, m.collision_rate, m.timeout_rate,
                m.mean_time_to_goal, m.mean_path_length);
  return buf;
}

// Loaded low-level actor with a fixed-skill policy wired to it; the bundle
// owns the net so the policy's pointer stays valid.
struct FixedSkillBundle {
  std::shared_ptr<ActorNet<float>> net;
  std::unique_ptr<FixedSkillPolicy<float>> policy;
};

inline FixedSkillBundle fixed_skill_policy_from_checkpoint(const SkillVector& skill,
                                                           const std::string& low_checkpoint,
                                                           const NetShape& shape,
                                                           ObsEncoder low_enc) {
  FixedSkillBundle b;
  b.net = std::make_shared<ActorNet<float>>(load_actor_checkpoint(low_checkpoint, shape));
  b.policy = std::make_unique<FixedSkillPolicy<float>>(skill, b.net.get(), std::move(low_enc));
  return b;
}

// Component-wise skill statistics pooled over every step of every episode.
struct SkillTraceSummary {
  std::array<double, SkillVector::dim> mean{};
  std::array<double, SkillVector::dim> stddev{};
  long steps = 0;
};

inline SkillTraceSummary skill_trace_summary(const std::vector<EpisodeLog>& logs) {
  if (logs.empty()) throw EvalError("skill_trace_summary: no logs");
  SkillTraceSummary out;
  // Welford keeps a constant trace at exactly zero spread.
  std::array<double, SkillVector::dim> m{}, s{};
  for (const auto& log : logs) {
    bool any = false;
    for (const auto& st : log.steps) {
      if (!st.has_skill) continue;
      any = true;
      ++out.steps;
      for (int k = 0; k < SkillVector::dim; ++k) {
        double d = st.skill[k] - m[k];
        m[k] += d / out.steps;
        s[k] += d * (st.skill[k] - m[k]);
      }
    }
    if (!any) throw EvalError("skill_trace_summary: log without skill trace");
  }
  for (int k = 0; k < SkillVector::dim; ++k) {
    out.mean[k] = m[k];
    out.stddev[k] = std::sqrt(std::max(0.0, s[k] / out.steps));
  }
  return out;
}

// A step of interest (for example corridor entry or close pedestrian
// proximity) around which to window the skill trace.
struct TraceEvent {
  std::size_t episode = 0;  // index into the logs vector
  int t = 0;
  std::string tag;
};

// First step per episode where clearance drops below the threshold.
inline std::vector<TraceEvent> clearance_events(const std::vector<EpisodeLog>& logs,
                                                double threshold,
                                                const std::string& tag = "close_clearance") {
  std::vector<TraceEvent> out;
  for (std::size_t e = 0; e < logs.size(); ++e) {
    for (int t = 0; t < logs[e].length(); ++t) {
      if (logs[e].steps[t].clearance < threshold) {
        out.push_back({e, t, tag});
        break;
      }
    }
  }
  return out;
}

// Mean skill per offset in [-window, +window] around the events, clipped at
// episode bounds; counts report how many events contributed at each offset.
struct WindowedTrace {
  int window = 0;
  std::vector<std::array<double, SkillVector::dim>> mean;  // size 2*window+1
  std::vector<long> counts;
};

inline WindowedTrace windowed_skill_trace(const std::vector<EpisodeLog>& logs,
                                          const std::vector<TraceEvent>& events, int window) {
  if (window < 0) throw EvalError("windowed_skill_trace: negative window");
  if (events.empty()) throw EvalError("windowed_skill_trace: no events");
  WindowedTrace out;
  out.window = window;
  out.mean.assign(2 * window + 1, {});
  out.counts.assign(2 * window + 1, 0);
  for (const auto& ev : events) {
    if (ev.episode >= logs.size())
      throw EvalError("windowed_skill_trace: event episode out of range");
    const EpisodeLog& log = logs[ev.episode];
    for (int off = -window; off <= window; ++off) {
      int t = ev.t + off;
      if (t < 0 || t >= log.length()) continue;
      if (!log.steps[t].has_skill)
        throw EvalError("windowed_skill_trace: log without skill trace");
      auto& slot = out.mean[static_cast<std::size_t>(off + window)];
      for (int k = 0; k < SkillVector::dim; ++k) slot[k] += log.steps[t].skill[k];
      ++out.counts[static_cast<std::size_t>(off + window)];
    }
  }
  for (std::size_t i = 0; i < out.mean.size(); ++i)
    if (out.counts[i] > 0)
      for (int k = 0; k < SkillVector::dim; ++k) out.mean[i][k] /= out.counts[i];
  return out;
}

}  // namespace navskills
