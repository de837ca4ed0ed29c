#pragma once

#include <atomic>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "navskills/config.hpp"
#include "navskills/env.hpp"
#include "navskills/policies.hpp"
#include "navskills/rollout.hpp"
#include "navskills/sac.hpp"

namespace navskills {

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Low-level goal relabeling: rebuild the reward against the substituted goal
// from the stored step parts (applied command, clearance, pose pair). A
// collision outcome survives relabeling; reaching the new goal scores as
// success; otherwise the original outcome stands.
inline RelabelRewardFn low_level_relabel_fn(double goal_radius, double robot_radius) {
  return [goal_radius, robot_radius](const Transition& tr, const Vec2& goal) {
    if (!tr.has_skill) throw ReplayError("low_level_relabel_fn: transition has no skill");
    double prev = (goal - tr.pose.position()).norm();
    double cur = (goal - tr.next_pose.position()).norm();
    Done d = tr.done == Done::collision ? Done::collision
                                        : (cur < goal_radius ? Done::goal : tr.done);
    double r = low_reward(prev, cur, tr.next_v, tr.next_w, tr.d_t_next, d, tr.skill,
                          robot_radius);
    return std::pair<double, Done>(r, d);
  };
}

inline EnvConfig env_config(const PhaseConfig& c) {
  EnvConfig e;
  e.mdp = c.mdp;
  e.mdp.time_cap = c.episode_cap;
  e.dt = c.dt;
  e.scan_noise = c.scan_noise;
  return e;
}

inline NetShape low_net_shape(const PhaseConfig& c) {
  NetShape s = c.shape;
  s.n_rays = c.mdp.n_rays;
  s.aux_dim = 4 + SkillVector::dim;
  s.action_dim = 2;
  return s;
}

inline NetShape high_net_shape(const PhaseConfig& c) {
  NetShape s = c.shape;
  s.n_rays = c.mdp.n_rays;
  s.aux_dim = 4;
  s.action_dim = SkillVector::dim;
  return s;
}

inline ObsEncoder low_encoder(const PhaseConfig& c) {
  return ObsEncoder{c.mdp.max_range, c.mdp.w_max, true};
}

inline ObsEncoder high_encoder(const PhaseConfig& c) {
  return ObsEncoder{c.mdp.max_range, c.mdp.w_max, false};
}

// Fixed per-purpose seed streams derived from (config seed, stream, index);
// nothing but integer counters is needed to reproduce any draw.
namespace detail {

enum : std::uint64_t {
  kStreamNetInit = 1,
  kStreamSkill = 2,
  kStreamScenario = 3,
  kStreamNoise = 4,
  kStreamAction = 5,
  kStreamUpdate = 6,
  kStreamHer = 7,
  kStreamBuffer = 8,
  kStreamEval = 9,
};

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t idx) {
  return mix64(mix64(seed + 0x9e3779b97f4a7c15ull * stream) ^ mix64(idx + 1));
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path config;
  std::filesystem::path telemetry;
  std::filesystem::path checkpoint;
  std::filesystem::path meta;
};

inline RunPaths prepare_run_dir(const PhaseConfig& cfg, std::uint64_t hash, bool resume) {
  std::string name = cfg.run_name.empty()
                         ? "p" + std::to_string(cfg.phase) + "-" + hex64(hash) + "-s" +
                               std::to_string(cfg.seed)
                         : cfg.run_name;
  RunPaths p;
  p.dir = std::filesystem::path(cfg.out_dir) / name;
  std::filesystem::create_directories(p.dir);
  p.config = p.dir / "config.json";
  p.telemetry = p.dir / "telemetry.jsonl";
  p.checkpoint = p.dir / "checkpoint.ckpt";
  p.meta = p.dir / "meta.json";
  if (!std::filesystem::exists(p.config)) save_phase_config(p.config.string(), cfg);
  // Wall-clock data lives only in this sidecar; every other artifact is a
  // pure function of (config, seed).
  nlohmann::json meta;
  if (std::filesystem::exists(p.meta)) {
    std::ifstream in(p.meta);
    try {
      in >> meta;
    } catch (const nlohmann::json::exception&) {
      meta = nlohmann::json::object();
    }
  }
  if (!meta.contains("created_unix")) meta["created_unix"] = static_cast<long>(std::time(nullptr));
  if (resume) meta["resumed_unix"].push_back(static_cast<long>(std::time(nullptr)));
  std::ofstream out(p.meta, std::ios::binary);
  out << meta.dump(2) << '\n';
  return p;
}

class Telemetry {
 public:
  Telemetry(const std::filesystem::path& path, bool append, std::ostream* echo = nullptr)
      : out_(path, append ? std::ios::app | std::ios::binary : std::ios::binary), echo_(echo) {
    if (!out_) throw TrainError("telemetry: cannot open " + path.string());
  }

  void line(const nlohmann::json& j) {
    std::string s = j.dump();
    out_ << s << '\n';
    if (!out_) throw TrainError("telemetry: write failed");
    // Per-step lines stay on disk only; everything coarser is progress.
    if (echo_ != nullptr && j.value("type", "") != "step") *echo_ << s << '\n';
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
  std::ostream* echo_;
};

template <typename T>
void write_sac_checkpoint(const std::string& path, std::uint64_t hash, const SacState<T>& sac,
                          const nlohmann::json& meta) {
  std::string tmp = path + ".tmp";
  write_checkpoint(tmp, hash, sac_named_tensors(sac), meta.dump());
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

struct TrainResult {
  std::string run_dir;
  std::string checkpoint_path;
  std::string telemetry_path;
  long steps = 0;
  long episodes = 0;
  long updates = 0;
  bool diverged = false;
  bool interrupted = false;
  double last_eval_success = -1.0;
  std::uint64_t config_hash = 0;
  std::uint64_t low_params_hash = 0;  // phase 2: content hash of the frozen low level
  // Final buffer composition, for relabeling diagnostics.
  long buffer_size = 0;
  long buffer_reward_zero = 0;
};

// Episode wrappers shared by training and tests.
struct EpisodeOptions {
  EnvConfig env;
  std::uint64_t noise_seed = 0;
  long episode_id = 0;
  Rng* action_rng = nullptr;  // nullptr -> deterministic actions
  std::vector<Transition>* transitions = nullptr;
};

inline EpisodeLog run_episode_phase1(const Scenario& sc, const ActorNet<float>& low,
                                     const SkillVector& skill, const EpisodeOptions& opt) {
  ObsEncoder enc{opt.env.mdp.max_range, opt.env.mdp.w_max, true};
  FixedSkillPolicy<float> pol(skill, &low, enc);
  NavEnv env(sc, opt.env, opt.noise_seed, opt.episode_id);
  return run_episode(env, pol, opt.action_rng,
                     opt.transitions ? TransitionLevel::low : TransitionLevel::none,
                     opt.transitions);
}

inline EpisodeLog run_episode_phase2(const Scenario& sc, const ActorNet<float>& high,
                                     const ActorNet<float>& low, const EpisodeOptions& opt) {
  ObsEncoder high_enc{opt.env.mdp.max_range, opt.env.mdp.w_max, false};
  ObsEncoder low_enc{opt.env.mdp.max_range, opt.env.mdp.w_max, true};
  ActorSkillSource<float> src(&high, high_enc);
  HierarchicalPolicy<float> pol(&src, &low, low_enc);
  NavEnv env(sc, opt.env, opt.noise_seed, opt.episode_id);
  return run_episode(env, pol, opt.action_rng,
                     opt.transitions ? TransitionLevel::high : TransitionLevel::none,
                     opt.transitions);
}

inline nlohmann::json net_shape_json(const NetShape& s) {
  return nlohmann::json{{"n_rays", s.n_rays},     {"c1f", s.c1f},
                        {"c1k", s.c1k},           {"c1s", s.c1s},
                        {"c2f", s.c2f},           {"c2k", s.c2k},
                        {"c2s", s.c2s},           {"fc_scan", s.fc_scan},
                        {"fc_merge", s.fc_merge}, {"aux_dim", s.aux_dim},
                        {"action_dim", s.action_dim}};
}

inline NetShape net_shape_from_json(const nlohmann::json& j) {
  NetShape s;
  s.n_rays = j.at("n_rays").get<int>();
  s.c1f = j.at("c1f").get<int>();
  s.c1k = j.at("c1k").get<int>();
  s.c1s = j.at("c1s").get<int>();
  s.c2f = j.at("c2f").get<int>();
  s.c2k = j.at("c2k").get<int>();
  s.c2s = j.at("c2s").get<int>();
  s.fc_scan = j.at("fc_scan").get<int>();
  s.fc_merge = j.at("fc_merge").get<int>();
  s.aux_dim = j.at("aux_dim").get<int>();
  s.action_dim = j.at("action_dim").get<int>();
  return s;
}

// Extract the actor tensors from a full SAC checkpoint.
inline ActorNet<float> load_actor_checkpoint(const std::string& path, NetShape expected) {
  CheckpointData<float> data = read_checkpoint<float>(path);
  ActorNet<float> net;
  net.shape = expected;
  net.shape.validate();
  net.p.assign(12, Tensor<float>(1, 1));
  int found = 0;
  for (const auto& [name, t] : data.tensors) {
    if (name.rfind("actor/", 0) != 0) continue;
    int idx = std::stoi(name.substr(6));
    if (idx < 0 || idx >= 12) throw CheckpointError("actor checkpoint: bad tensor " + name);
    net.p[idx] = t;
    ++found;
  }
  if (found != 12)
    throw CheckpointError("actor checkpoint: expected 12 actor tensors, found " +
                          std::to_string(found));
  Rng shape_rng(0);
  ActorNet<float> ref = ActorNet<float>::init(net.shape, shape_rng);
  for (int i = 0; i < 12; ++i)
    if (!net.p[i].same_shape(ref.p[i]))
      throw CheckpointError("actor checkpoint: tensor " + std::to_string(i) +
                            " has shape (" + std::to_string(net.p[i].rows) + "," +
                            std::to_string(net.p[i].cols) + "), model needs (" +
                            std::to_string(ref.p[i].rows) + "," + std::to_string(ref.p[i].cols) +
                            ")");
  return net;
}

inline std::uint64_t params_hash(const std::vector<Tensor<float>>& p) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& t : p) h = fnv1a64(t.v.data(), t.v.size() * sizeof(float), h);
  return h;
}

// Actor plus the encoder it was trained with, recovered from checkpoint
// metadata alone (training runs embed net geometry and encoder scales).
struct LoadedActor {
  std::shared_ptr<ActorNet<float>> net;
  ObsEncoder enc{6.0, 0.2, false};
  int phase = 0;
};

inline LoadedActor load_actor_auto(const std::string& path) {
  CheckpointData<float> data = read_checkpoint<float>(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(data.meta);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path + ": bad checkpoint metadata: " + e.what());
  }
  if (!meta.contains("net"))
    throw CheckpointError(path + ": checkpoint metadata has no net geometry");
  NetShape shape;
  try {
    shape = net_shape_from_json(meta.at("net"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path + ": bad net geometry: " + e.what());
  }
  LoadedActor out;
  out.net = std::make_shared<ActorNet<float>>(load_actor_checkpoint(path, shape));
  out.phase = meta.value("phase", 0);
  out.enc = ObsEncoder{meta.value("max_range", 6.0), meta.value("w_max", 0.2),
                       shape.aux_dim == 4 + SkillVector::dim};
  return out;
}

namespace detail {

struct EvalSummary {
  double success_rate = 0.0;
  nlohmann::json line;
};

// Deterministic fixed-skill eval over fresh scenarios; scores every preset in
// cfg.eval_skills and reports the first one as the headline rate.
inline EvalSummary eval_snapshot_phase1(const PhaseConfig& cfg, const ActorNet<float>& actor,
                                        long step) {
  EvalSummary out;
  nlohmann::json per_skill = nlohmann::json::object();
  bool first = true;
  for (const auto& name : cfg.eval_skills) {
    SkillVector skill = named_skill(name);
    int successes = 0;
    for (int e = 0; e < cfg.eval_episodes; ++e) {
      std::uint64_t es = stream_seed(cfg.seed, kStreamEval, static_cast<std::uint64_t>(e));
      Scenario sc = make_scenario(cfg.scenarios[static_cast<std::size_t>(e) % cfg.scenarios.size()], es);
      EpisodeOptions opt;
      opt.env = env_config(cfg);
      opt.noise_seed = mix64(es + 17);
      opt.episode_id = e;
      EpisodeLog log = run_episode_phase1(sc, actor, skill, opt);
      if (log.outcome == Done::goal) ++successes;
    }
    double rate = cfg.eval_episodes > 0 ? static_cast<double>(successes) / cfg.eval_episodes : 0.0;
    per_skill[name] = rate;
    if (first) {
      out.success_rate = rate;
      first = false;
    }
  }
  out.line = nlohmann::json{{"type", "eval"}, {"step", step}, {"success", per_skill}};
  return out;
}

inline EvalSummary eval_snapshot_phase2(const PhaseConfig& cfg, const ActorNet<float>& high,
                                        const ActorNet<float>& low, long step) {
  EvalSummary out;
  int successes = 0;
  for (int e = 0; e < cfg.eval_episodes; ++e) {
    std::uint64_t es = stream_seed(cfg.seed, kStreamEval, static_cast<std::uint64_t>(e));
    Scenario sc = make_scenario(cfg.scenarios[static_cast<std::size_t>(e) % cfg.scenarios.size()], es);
    EpisodeOptions opt;
    opt.env = env_config(cfg);
    opt.noise_seed = mix64(es + 17);
    opt.episode_id = e;
    EpisodeLog log = run_episode_phase2(sc, high, low, opt);
    if (log.outcome == Done::goal) ++successes;
  }
  out.success_rate = cfg.eval_episodes > 0 ? static_cast<double>(successes) / cfg.eval_episodes : 0.0;
  out.line = nlohmann::json{{"type", "eval"}, {"step", step}, {"success_rate", out.success_rate}};
  return out;
}

inline nlohmann::json step_line(long step, long episode, const SacLosses* losses,
                                std::size_t buffer_size) {
  nlohmann::json j{{"type", "step"}, {"step", step}, {"episode", episode},
                   {"buffer", buffer_size}};
  if (losses != nullptr) {
    j["critic1"] = losses->critic1;
    j["critic2"] = losses->critic2;
    j["actor"] = losses->actor;
    j["alpha"] = losses->alpha_value;
    j["alpha_loss"] = losses->alpha;
    j["mean_q"] = losses->mean_q;
  }
  return j;
}

inline nlohmann::json episode_line(long episode, long step, const EpisodeLog& log) {
  return nlohmann::json{{"type", "episode"},
                        {"episode", episode},
                        {"step", step},
                        {"len", log.length()},
                        {"outcome", done_name(log.outcome)},
                        {"return_low", log.return_low},
                        {"return_high", log.return_high},
                        {"path_length", log.path_length}};
}

}  // namespace detail

namespace detail {

inline void count_buffer_rewards(const ReplayBuffer& buf, TrainResult& res) {
  res.buffer_size = static_cast<long>(buf.size());
  res.buffer_reward_zero = 0;
  for (std::size_t i = 0; i < buf.size(); ++i)
    if (buf.at(i).reward == 0.0f) ++res.buffer_reward_zero;
}

}  // namespace detail

// Phase 1: SAC on the skill-conditioned low level. Resumable from its own
// checkpoint (replay buffer is rebuilt, counters and parameters restored).
// stop, when given, requests a graceful interrupt: flush checkpoint and exit.
// progress, when given, receives every non-step telemetry line.
inline TrainResult train_phase1(const PhaseConfig& cfg, const std::string& resume_from = "",
                                const std::atomic<bool>* stop = nullptr,
                                std::ostream* progress = nullptr) {
  cfg.validate();
  if (cfg.phase != 1) throw TrainError("train_phase1: config is for phase " +
                                       std::to_string(cfg.phase));
  std::uint64_t hash = config_hash(cfg);
  detail::RunPaths paths = detail::prepare_run_dir(cfg, hash, !resume_from.empty());

  Rng init_rng(detail::stream_seed(cfg.seed, detail::kStreamNetInit, 0));
  SacConfig sac_cfg = cfg.sac;
  sac_cfg.obs = low_encoder(cfg);
  SacState<float> sac = SacState<float>::init(low_net_shape(cfg), init_rng, sac_cfg);

  long step = 0, episode = 0;
  if (!resume_from.empty()) {
    CheckpointData<float> data = read_checkpoint_checked<float>(resume_from, hash);
    sac_load_tensors(sac, data.tensors);
    nlohmann::json meta = nlohmann::json::parse(data.meta);
    step = meta.value("step", 0L);
    episode = meta.value("episode", 0L);
  }

  TrainResult res;
  res.run_dir = paths.dir.string();
  res.checkpoint_path = paths.checkpoint.string();
  res.telemetry_path = paths.telemetry.string();
  res.config_hash = hash;

  detail::Telemetry tel(paths.telemetry, !resume_from.empty(), progress);
  auto save = [&](long s, long e, double eval_rate) {
    nlohmann::json meta{{"phase", 1},          {"step", s},
                        {"episode", e},        {"eval_success", eval_rate},
                        {"net", net_shape_json(low_net_shape(cfg))},
                        {"max_range", cfg.mdp.max_range},
                        {"w_max", cfg.mdp.w_max}};
    detail::write_sac_checkpoint(paths.checkpoint.string(), hash, sac, meta);
  };
  if (resume_from.empty()) save(0, 0, -1.0);

  ReplayBuffer buffer(cfg.buffer_capacity,
                      detail::stream_seed(cfg.seed, detail::kStreamBuffer, 0));
  ObsEncoder enc = low_encoder(cfg);
  SkillVector skill{};
  FixedSkillPolicy<float> pol(skill, &sac.actor, enc);
  EnvConfig ecfg = env_config(cfg);
  RelabelRewardFn low_relabel =
      cfg.her_low ? low_level_relabel_fn(cfg.mdp.goal_radius, 0.3) : RelabelRewardFn{};

  try {
    while (step < cfg.total_steps) {
      Rng skill_rng(detail::stream_seed(cfg.seed, detail::kStreamSkill,
                                        static_cast<std::uint64_t>(episode)));
      skill = sample_skill(cfg.skills, skill_rng);
      pol.set_skill(skill);
      Scenario sc = make_scenario(cfg.scenarios[static_cast<std::size_t>(episode) % cfg.scenarios.size()],
                                  detail::stream_seed(cfg.seed, detail::kStreamScenario,
                                                      static_cast<std::uint64_t>(episode)));
      NavEnv env(std::move(sc), ecfg,
                 detail::stream_seed(cfg.seed, detail::kStreamNoise,
                                     static_cast<std::uint64_t>(episode)),
                 episode);
      Rng act_rng(detail::stream_seed(cfg.seed, detail::kStreamAction,
                                      static_cast<std::uint64_t>(episode)));
      EpisodeLog log;
      log.dt = cfg.dt;
      log.episode_id = episode;
      std::vector<Transition> ep_transitions;

      while (env.done() == Done::none && step < cfg.total_steps) {
        StateHigh s = env.observe();
        std::vector<double> a = pol.act(s, &act_rng);
        StepOutcome outm = env.step(a, pol.last_skill());
        Transition tr = outm.tr;
        tr.action = {static_cast<float>(a[0]), static_cast<float>(a[1])};
        tr.reward = static_cast<float>(outm.low_reward);
        if (cfg.her_low) ep_transitions.push_back(tr);
        buffer.push(std::move(tr));

        EpisodeStep es;
        es.v = static_cast<float>(outm.tr.next_v);
        es.w = static_cast<float>(outm.tr.next_w);
        es.reward_low = outm.low_reward;
        es.reward_high = outm.high_reward;
        es.clearance = outm.tr.d_t_next;
        es.has_skill = true;
        es.skill = skill;
        es.done = outm.done;
        log.return_low += es.reward_low;
        log.return_high += es.reward_high;
        log.steps.push_back(std::move(es));
        ++step;

        const SacLosses* lptr = nullptr;
        SacLosses losses;
        if (step > cfg.warmup_steps &&
            buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
          for (int u = 0; u < cfg.updates_per_step; ++u) {
            auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size));
            Rng up_rng(detail::stream_seed(cfg.seed, detail::kStreamUpdate,
                                           static_cast<std::uint64_t>(sac.update_count)));
            losses = sac_update(sac, batch, up_rng);
            lptr = &losses;
            ++res.updates;
          }
        }
        tel.line(detail::step_line(step, episode, lptr, buffer.size()));

        if (cfg.eval_every > 0 && step % cfg.eval_every == 0) {
          detail::EvalSummary ev = detail::eval_snapshot_phase1(cfg, sac.actor, step);
          res.last_eval_success = ev.success_rate;
          tel.line(ev.line);
          save(step, episode, ev.success_rate);
        }
        if (stop != nullptr && stop->load()) {
          tel.line({{"type", "interrupt"}, {"step", step}});
          save(step, episode, res.last_eval_success);
          res.interrupted = true;
          res.steps = step;
          res.episodes = episode;
          detail::count_buffer_rewards(buffer, res);
          tel.flush();
          return res;
        }
      }
      log.outcome = env.done();
      log.path_length = env.path_length();
      tel.line(detail::episode_line(episode, step, log));
      if (cfg.her_low && cfg.her_k > 0 && !ep_transitions.empty()) {
        Rng her_rng(detail::stream_seed(cfg.seed, detail::kStreamHer,
                                        static_cast<std::uint64_t>(episode)));
        for (auto& tr : her_relabel(ep_transitions, cfg.her_k, low_relabel, her_rng))
          buffer.push(std::move(tr));
      }
      ++episode;
    }
  } catch (const NumericError& e) {
    tel.line({{"type", "abort"}, {"step", step}, {"error", e.what()}});
    tel.flush();
    res.diverged = true;
    res.steps = step;
    res.episodes = episode;
    detail::count_buffer_rewards(buffer, res);
    return res;  // checkpoint on disk is the last finite snapshot
  } catch (const GraphError& e) {
    tel.line({{"type", "abort"}, {"step", step}, {"error", e.what()}});
    tel.flush();
    res.diverged = true;
    res.steps = step;
    res.episodes = episode;
    detail::count_buffer_rewards(buffer, res);
    return res;
  }

  if (cfg.eval_every > 0) {
    detail::EvalSummary ev = detail::eval_snapshot_phase1(cfg, sac.actor, step);
    res.last_eval_success = ev.success_rate;
    tel.line(ev.line);
  }
  save(step, episode, res.last_eval_success);
  tel.flush();
  res.steps = step;
  res.episodes = episode;
  detail::count_buffer_rewards(buffer, res);
  return res;
}

// Phase 2: SAC + HER on the high level; the low level stays frozen (its
// parameter hash is recorded and re-verified at the end of the run).
inline TrainResult train_phase2(const PhaseConfig& cfg, const std::string& resume_from = "",
                                const std::atomic<bool>* stop = nullptr,
                                std::ostream* progress = nullptr) {
  cfg.validate();
  if (cfg.phase != 2) throw TrainError("train_phase2: config is for phase " +
                                       std::to_string(cfg.phase));
  if (cfg.low_checkpoint.empty()) throw TrainError("train_phase2: low_checkpoint not set");
  ActorNet<float> low = load_actor_checkpoint(cfg.low_checkpoint, low_net_shape(cfg));
  std::uint64_t low_hash = params_hash(low.p);

  std::uint64_t hash = config_hash(cfg);
  detail::RunPaths paths = detail::prepare_run_dir(cfg, hash, !resume_from.empty());

  Rng init_rng(detail::stream_seed(cfg.seed, detail::kStreamNetInit, 0));
  SacConfig sac_cfg = cfg.sac;
  sac_cfg.obs = high_encoder(cfg);
  SacState<float> sac = SacState<float>::init(high_net_shape(cfg), init_rng, sac_cfg);

  long step = 0, episode = 0;
  if (!resume_from.empty()) {
    CheckpointData<float> data = read_checkpoint_checked<float>(resume_from, hash);
    sac_load_tensors(sac, data.tensors);
    nlohmann::json meta = nlohmann::json::parse(data.meta);
    step = meta.value("step", 0L);
    episode = meta.value("episode", 0L);
  }

  TrainResult res;
  res.run_dir = paths.dir.string();
  res.checkpoint_path = paths.checkpoint.string();
  res.telemetry_path = paths.telemetry.string();
  res.config_hash = hash;
  res.low_params_hash = low_hash;

  detail::Telemetry tel(paths.telemetry, !resume_from.empty(), progress);
  auto save = [&](long s, long e, double eval_rate) {
    nlohmann::json meta{{"phase", 2},          {"step", s},
                        {"episode", e},        {"eval_success", eval_rate},
                        {"low_hash", low_hash},
                        {"net", net_shape_json(high_net_shape(cfg))},
                        {"max_range", cfg.mdp.max_range},
                        {"w_max", cfg.mdp.w_max}};
    detail::write_sac_checkpoint(paths.checkpoint.string(), hash, sac, meta);
  };
  if (resume_from.empty()) save(0, 0, -1.0);

  ReplayBuffer buffer(cfg.buffer_capacity,
                      detail::stream_seed(cfg.seed, detail::kStreamBuffer, 0));
  ObsEncoder high_enc = high_encoder(cfg);
  ObsEncoder low_enc = low_encoder(cfg);
  ActorSkillSource<float> src(&sac.actor, high_enc);
  HierarchicalPolicy<float> pol(&src, &low, low_enc);
  EnvConfig ecfg = env_config(cfg);
  RelabelRewardFn relabel = high_level_relabel_fn(cfg.mdp.goal_radius);

  try {
    while (step < cfg.total_steps) {
      Scenario sc = make_scenario(cfg.scenarios[static_cast<std::size_t>(episode) % cfg.scenarios.size()],
                                  detail::stream_seed(cfg.seed, detail::kStreamScenario,
                                                      static_cast<std::uint64_t>(episode)));
      NavEnv env(std::move(sc), ecfg,
                 detail::stream_seed(cfg.seed, detail::kStreamNoise,
                                     static_cast<std::uint64_t>(episode)),
                 episode);
      Rng act_rng(detail::stream_seed(cfg.seed, detail::kStreamAction,
                                      static_cast<std::uint64_t>(episode)));
      EpisodeLog log;
      log.dt = cfg.dt;
      log.episode_id = episode;
      std::vector<Transition> ep_transitions;

      while (env.done() == Done::none && step < cfg.total_steps) {
        StateHigh s = env.observe();
        std::vector<double> a = pol.act(s, &act_rng);
        StepOutcome outm = env.step(a, pol.last_skill());
        const std::vector<double>& ha = *pol.last_high_action();
        Transition tr = outm.tr;
        tr.action.assign(ha.size(), 0.0f);
        for (std::size_t i = 0; i < ha.size(); ++i) tr.action[i] = static_cast<float>(ha[i]);
        tr.reward = static_cast<float>(outm.high_reward);
        tr.has_skill = false;
        tr.skill = SkillVector{};
        ep_transitions.push_back(std::move(tr));

        EpisodeStep es;
        es.v = outm.tr.next_v;
        es.w = outm.tr.next_w;
        es.reward_low = outm.low_reward;
        es.reward_high = outm.high_reward;
        es.clearance = outm.tr.d_t_next;
        es.has_skill = true;
        es.skill = *pol.last_skill();
        es.done = outm.done;
        log.return_low += es.reward_low;
        log.return_high += es.reward_high;
        log.steps.push_back(std::move(es));
        ++step;

        const SacLosses* lptr = nullptr;
        SacLosses losses;
        if (step > cfg.warmup_steps &&
            buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
          for (int u = 0; u < cfg.updates_per_step; ++u) {
            auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size));
            Rng up_rng(detail::stream_seed(cfg.seed, detail::kStreamUpdate,
                                           static_cast<std::uint64_t>(sac.update_count)));
            losses = sac_update(sac, batch, up_rng);
            lptr = &losses;
            ++res.updates;
          }
        }
        tel.line(detail::step_line(step, episode, lptr, buffer.size()));

        if (cfg.eval_every > 0 && step % cfg.eval_every == 0) {
          detail::EvalSummary ev = detail::eval_snapshot_phase2(cfg, sac.actor, low, step);
          res.last_eval_success = ev.success_rate;
          tel.line(ev.line);
          save(step, episode, ev.success_rate);
        }
        if (stop != nullptr && stop->load()) {
          tel.line({{"type", "interrupt"}, {"step", step}});
          save(step, episode, res.last_eval_success);
          res.interrupted = true;
          res.steps = step;
          res.episodes = episode;
          detail::count_buffer_rewards(buffer, res);
          tel.flush();
          return res;
        }
      }
      log.outcome = env.done();
      log.path_length = env.path_length();
      tel.line(detail::episode_line(episode, step, log));
      for (const auto& tr : ep_transitions) buffer.push(tr);
      if (cfg.her && cfg.her_k > 0 && !ep_transitions.empty()) {
        Rng her_rng(detail::stream_seed(cfg.seed, detail::kStreamHer,
                                        static_cast<std::uint64_t>(episode)));
        for (auto& tr : her_relabel(ep_transitions, cfg.her_k, relabel, her_rng))
          buffer.push(std::move(tr));
      }
      ++episode;
    }
  } catch (const NumericError& e) {
    tel.line({{"type", "abort"}, {"step", step}, {"error", e.what()}});
    tel.flush();
    res.diverged = true;
    res.steps = step;
    res.episodes = episode;
    detail::count_buffer_rewards(buffer, res);
    return res;
  } catch (const GraphError& e) {
    tel.line({{"type", "abort"}, {"step", step}, {"error", e.what()}});
    tel.flush();
    res.diverged = true;
    res.steps = step;
    res.episodes = episode;
    detail::count_buffer_rewards(buffer, res);
    return res;
  }

  if (params_hash(low.p) != low_hash)
    throw TrainError("train_phase2: frozen low-level parameters changed");
  if (cfg.eval_every > 0) {
    detail::EvalSummary ev = detail::eval_snapshot_phase2(cfg, sac.actor, low, step);
    res.last_eval_success = ev.success_rate;
    tel.line(ev.line);
  }
  save(step, episode, res.last_eval_success);
  tel.flush();
  res.steps = step;
  res.episodes = episode;
  detail::count_buffer_rewards(buffer, res);
  return res;
}

inline TrainResult train(const PhaseConfig& cfg, const std::string& resume_from = "",
                         const std::atomic<bool>* stop = nullptr,
                         std::ostream* progress = nullptr) {
  return cfg.phase == 1 ? train_phase1(cfg, resume_from, stop, progress)
                        : train_phase2(cfg, resume_from, stop, progress);
}

}  // namespace navskills
