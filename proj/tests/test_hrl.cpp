#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

#include "json.hpp"
#include "navskills/config.hpp"
#include "navskills/env.hpp"
#include "navskills/policies.hpp"
#include "navskills/rollout.hpp"
#include "navskills/train.hpp"

namespace navskills {
namespace {

NetShape tiny_shape() {
  NetShape s;
  s.n_rays = 12;
  s.c1f = 3;
  s.c1k = 3;
  s.c1s = 2;
  s.c2f = 2;
  s.c2k = 3;
  s.c2s = 2;
  s.fc_scan = 8;
  s.fc_merge = 6;
  s.aux_dim = 4;
  s.action_dim = 2;
  return s;
}

NetShape low_shape() {
  NetShape s = tiny_shape();
  s.aux_dim = 4 + SkillVector::dim;
  return s;
}

NetShape high_shape() {
  NetShape s = tiny_shape();
  s.action_dim = SkillVector::dim;
  return s;
}

MdpConfig tiny_mdp() {
  MdpConfig m;
  m.n_rays = 12;
  return m;
}

Scenario empty_scenario(Pose start, Vec2 goal, double side = 10.0) {
  Scenario sc;
  sc.world = make_empty_world(side, side);
  sc.world.robot.pose = start;
  sc.world.goal = goal;
  sc.start = start;
  sc.goal = goal;
  return sc;
}

EnvConfig tiny_env_config(int cap = 1000) {
  EnvConfig e;
  e.mdp = tiny_mdp();
  e.mdp.time_cap = cap;
  return e;
}

std::string temp_dir(const std::string& leaf) {
  auto p = std::filesystem::path(::testing::TempDir()) / leaf;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

// Constant full-throttle turn: circles forever, never reaches a distant goal.
struct CirclePolicy : Policy {
  std::vector<double> act(const StateHigh&, Rng*) override { return {1.0, 1.0}; }
};

PhaseConfig toy_config(int phase, const std::string& leaf) {
  PhaseConfig c;
  c.phase = phase;
  ScenarioSpec sp;
  sp.map.kind = MapSpec::Kind::indoor;
  sp.map.width = 10.0;
  sp.map.height = 10.0;
  sp.map.n_static = 0;
  sp.map.n_dynamic = 0;
  sp.map.n_corridors = 0;
  sp.map.seed = 11;
  sp.opts.min_start_goal_sep = 5.0;
  c.scenarios = {sp};
  c.mdp = tiny_mdp();
  c.shape = tiny_shape();
  c.total_steps = 50;
  c.episode_cap = 20;
  c.buffer_capacity = 4096;
  c.batch_size = 8;
  c.warmup_steps = 10;
  c.eval_every = 0;
  c.eval_episodes = 2;
  c.seed = 7;
  c.out_dir = temp_dir(leaf);
  return c;
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  EXPECT_TRUE(in.good()) << path;
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

TEST(SampleSkill, DegenerateBoundsAreConstant) {
  SkillDistribution d;
  d.lo.fill(0.1);
  d.hi.fill(0.1);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    SkillVector s = sample_skill(d, rng);
    for (int k = 0; k < SkillVector::dim; ++k) EXPECT_EQ(s[k], 0.1);
  }
}

TEST(SampleSkill, SamplesStayInsideBounds) {
  SkillDistribution d;
  d.lo = {0.0, 0.05, 0.1, 0.0, 0.15};
  d.hi = {0.05, 0.1, 0.2, 0.0, 0.2};
  Rng rng(17);
  for (int i = 0; i < 10000; ++i) {
    SkillVector s = sample_skill(d, rng);
    EXPECT_TRUE(skill_in_box(s, d.w_max));
    for (int k = 0; k < SkillVector::dim; ++k) {
      EXPECT_GE(s[k], d.lo[k]);
      EXPECT_LE(s[k], d.hi[k]);
    }
  }
}

TEST(SampleSkill, MonteCarloMeansMatchMidpoint) {
  SkillDistribution d;
  d.lo = {0.0, 0.02, 0.0, 0.1, 0.0};
  d.hi = {0.2, 0.18, 0.06, 0.2, 0.2};
  const int n = 100000;
  Rng rng(99);
  std::array<double, SkillVector::dim> sum{};
  for (int i = 0; i < n; ++i) {
    SkillVector s = sample_skill(d, rng);
    for (int k = 0; k < SkillVector::dim; ++k) sum[k] += s[k];
  }
  for (int k = 0; k < SkillVector::dim; ++k) {
    double mid = 0.5 * (d.lo[k] + d.hi[k]);
    double sigma_mean = (d.hi[k] - d.lo[k]) / std::sqrt(12.0 * n);
    EXPECT_NEAR(sum[k] / n, mid, 3.0 * sigma_mean + 1e-12) << "component " << k;
  }
}

TEST(SampleSkill, InvalidBoundsRejected) {
  SkillDistribution d;
  d.lo[2] = 0.15;
  d.hi[2] = 0.1;
  Rng rng(1);
  EXPECT_THROW(sample_skill(d, rng), ConfigError);
  SkillDistribution e;
  e.hi[0] = 0.25;  // above w_max
  EXPECT_THROW(e.validate(), ConfigError);
}

TEST(RunEpisodePhase1, GoalAtStartIsOneStepSuccess) {
  Rng rng(5);
  ActorNet<float> low = ActorNet<float>::init(low_shape(), rng);
  Scenario sc = empty_scenario({5.0, 5.0, 0.0}, {5.05, 5.0});
  EpisodeOptions opt;
  opt.env = tiny_env_config();
  SkillVector zero{};  // all weights 0: return reduces to r_success
  EpisodeLog log = run_episode_phase1(sc, low, zero, opt);
  EXPECT_EQ(log.length(), 1);
  EXPECT_EQ(log.outcome, Done::goal);
  EXPECT_EQ(log.return_low, 1.0);
  EXPECT_EQ(log.steps[0].reward_high, 0.0);
}

TEST(RunEpisodePhase1, EpisodeNeverExceedsCap) {
  Scenario sc = empty_scenario({5.0, 5.0, 0.0}, {1.0, 1.0});
  NavEnv env(sc, tiny_env_config(1000), 0, 0);
  CirclePolicy pol;
  EpisodeLog log = run_episode(env, pol, nullptr);
  EXPECT_EQ(log.length(), 1000);
  EXPECT_EQ(log.outcome, Done::timeout);
}

TEST(RunEpisodePhase1, SameSeedSameLogHashDifferentSeedDiffers) {
  Rng rng(21);
  ActorNet<float> low = ActorNet<float>::init(low_shape(), rng);
  SkillVector skill = named_skill("mild");
  Scenario sc = empty_scenario({3.0, 3.0, 0.5}, {8.0, 8.0});
  EpisodeOptions opt;
  opt.env = tiny_env_config(60);

  Rng a1(42), a2(42), a3(43);
  opt.action_rng = &a1;
  EpisodeLog l1 = run_episode_phase1(sc, low, skill, opt);
  opt.action_rng = &a2;
  EpisodeLog l2 = run_episode_phase1(sc, low, skill, opt);
  opt.action_rng = &a3;
  EpisodeLog l3 = run_episode_phase1(sc, low, skill, opt);
  EXPECT_EQ(episode_log_hash(l1), episode_log_hash(l2));
  EXPECT_NE(episode_log_hash(l1), episode_log_hash(l3));
}

TEST(RunEpisodePhase1, SkillConstantWithinEpisodeAndTransitionsConsistent) {
  Rng rng(31);
  ActorNet<float> low = ActorNet<float>::init(low_shape(), rng);
  SkillVector skill = named_skill("safe");
  Scenario sc = empty_scenario({3.0, 3.0, 0.0}, {8.0, 8.0});
  EpisodeOptions opt;
  opt.env = tiny_env_config(40);
  Rng arng(9);
  opt.action_rng = &arng;
  std::vector<Transition> trs;
  opt.transitions = &trs;
  EpisodeLog log = run_episode_phase1(sc, low, skill, opt);

  ASSERT_EQ(static_cast<int>(trs.size()), log.length());
  for (int i = 0; i < log.length(); ++i) {
    for (int k = 0; k < SkillVector::dim; ++k) {
      EXPECT_EQ(log.steps[i].skill[k], skill[k]);
      EXPECT_EQ(trs[i].skill[k], skill[k]);
    }
    EXPECT_TRUE(trs[i].has_skill);
    EXPECT_EQ(trs[i].t, i);
    EXPECT_EQ(static_cast<int>(trs[i].scan.size()), 12);
    EXPECT_EQ(static_cast<int>(trs[i].next_scan.size()), 12);
    EXPECT_EQ(trs[i].achieved.x, trs[i].next_pose.x);
    EXPECT_EQ(trs[i].achieved.y, trs[i].next_pose.y);
    EXPECT_TRUE(std::isfinite(trs[i].reward));
    if (i > 0) {
      EXPECT_EQ(trs[i].pose.x, trs[i - 1].next_pose.x);
      EXPECT_EQ(trs[i].v, trs[i - 1].next_v);
      EXPECT_EQ(trs[i].w, trs[i - 1].next_w);
    }
  }
  EXPECT_EQ(trs.back().done, log.outcome);
}

TEST(NavEnvTest, RejectsBadActionsAndStepsAfterTerminal) {
  Scenario sc = empty_scenario({5.0, 5.0, 0.0}, {5.05, 5.0});
  NavEnv env(sc, tiny_env_config(), 0, 0);
  EXPECT_THROW(env.step({0.1}), ShapeError);
  EXPECT_THROW(env.step({0.1, std::nan("")}), NumericError);
  env.step({1.0, 0.0});  // reaches the goal
  ASSERT_EQ(env.done(), Done::goal);
  EXPECT_THROW(env.step({0.0, 0.0}), EnvError);
}

TEST(RunEpisodePhase2, ConstantHighActorMatchesFixedSkillBitwise) {
  Rng rng(77);
  ActorNet<float> low = ActorNet<float>::init(low_shape(), rng);
  ActorNet<float> high = ActorNet<float>::init(high_shape(), rng);
  for (auto& x : high.p[8].v) x = 0.0f;  // mean head -> bias (zero): constant output

  Scenario sc = empty_scenario({3.0, 3.0, 0.3}, {8.0, 7.0});
  EpisodeOptions opt;
  opt.env = tiny_env_config(50);
  EpisodeLog hier = run_episode_phase2(sc, high, low, opt);

  // tanh output 0 lands mid-box: exactly 0.1 per component.
  SkillVector mid;
  for (int k = 0; k < SkillVector::dim; ++k) mid[k] = 0.1;
  EpisodeLog fixed = run_episode_phase1(sc, low, mid, opt);

  ASSERT_EQ(hier.length(), fixed.length());
  EXPECT_EQ(episode_log_hash(hier), episode_log_hash(fixed));
  for (int i = 0; i < hier.length(); ++i) {
    EXPECT_EQ(hier.steps[i].pose.x, fixed.steps[i].pose.x);
    EXPECT_EQ(hier.steps[i].pose.y, fixed.steps[i].pose.y);
    EXPECT_EQ(hier.steps[i].pose.theta, fixed.steps[i].pose.theta);
  }
}

TEST(RunEpisodePhase2, SkillsStayInBoxAndLowParamsFrozen) {
  Rng rng(123);
  ActorNet<float> low = ActorNet<float>::init(low_shape(), rng);
  ActorNet<float> high = ActorNet<float>::init(high_shape(), rng);
  std::uint64_t before = params_hash(low.p);

  Scenario sc = empty_scenario({3.0, 3.0, 0.0}, {8.0, 8.0});
  EpisodeOptions opt;
  opt.env = tiny_env_config(60);
  Rng arng(5);
  opt.action_rng = &arng;  // stochastic skills
  std::vector<Transition> trs;
  opt.transitions = &trs;
  EpisodeLog log = run_episode_phase2(sc, high, low, opt);

  ASSERT_GT(log.length(), 0);
  for (const auto& s : log.steps) {
    ASSERT_TRUE(s.has_skill);
    EXPECT_TRUE(skill_in_box(s.skill, 0.2));
  }
  for (const auto& tr : trs) {
    EXPECT_FALSE(tr.has_skill);
    ASSERT_EQ(tr.action.size(), static_cast<std::size_t>(SkillVector::dim));
    EXPECT_TRUE(tr.reward == 0.0f || tr.reward == -1.0f);
  }
  EXPECT_EQ(params_hash(low.p), before);
}

TEST(ConfigTest, JsonRoundTripPreservesHash) {
  PhaseConfig c = toy_config(1, "cfg_roundtrip");
  ScenarioSpec named;
  named.name = "corridor";
  c.scenarios.push_back(named);
  c.eval_skills = {"goal_oriented", "safe"};
  c.skills.lo = {0.0, 0.01, 0.02, 0.03, 0.04};
  c.sac.lr_actor = 3e-4;
  c.her_k = 6;

  nlohmann::json j = phase_config_json(c);
  PhaseConfig back = phase_config_from_json(j);
  EXPECT_EQ(config_hash(c), config_hash(back));

  std::string path = c.out_dir + "/cfg.json";
  save_phase_config(path, c);
  PhaseConfig loaded = load_phase_config(path);
  EXPECT_EQ(config_hash(c), config_hash(loaded));
  // Output locations do not contribute to identity.
  PhaseConfig moved = c;
  moved.out_dir = "elsewhere";
  moved.run_name = "other";
  EXPECT_EQ(config_hash(c), config_hash(moved));
}

TEST(ConfigTest, InvalidConfigsRejected) {
  PhaseConfig c = toy_config(1, "cfg_invalid");
  c.eval_skills = {"not_a_skill"};
  EXPECT_ANY_THROW(c.validate());
  c = toy_config(1, "cfg_invalid");
  c.scenarios.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = toy_config(3, "cfg_invalid");
  EXPECT_THROW(c.validate(), ConfigError);
  nlohmann::json j = phase_config_json(toy_config(1, "cfg_invalid"));
  j["scenarios"][0]["map"]["kind"] = "underwater";
  EXPECT_THROW(phase_config_from_json(j), ConfigError);
}

TEST(TrainPhase1, ZeroStepsCheckpointEqualsInit) {
  PhaseConfig cfg = toy_config(1, "p1_zero");
  cfg.total_steps = 0;
  TrainResult res = train_phase1(cfg);
  EXPECT_EQ(res.steps, 0);
  EXPECT_FALSE(res.diverged);

  CheckpointData<float> data = read_checkpoint<float>(res.checkpoint_path);
  EXPECT_EQ(data.config_hash, config_hash(cfg));

  Rng init_rng(detail::stream_seed(cfg.seed, detail::kStreamNetInit, 0));
  SacConfig sc = cfg.sac;
  sc.obs = low_encoder(cfg);
  SacState<float> expect = SacState<float>::init(low_net_shape(cfg), init_rng, sc);
  NamedTensorList<float> want = sac_named_tensors(expect);
  ASSERT_EQ(want.size(), data.tensors.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(want[i].first, data.tensors[i].first);
    ASSERT_TRUE(want[i].second.same_shape(data.tensors[i].second)) << want[i].first;
    for (std::size_t k = 0; k < want[i].second.v.size(); ++k)
      ASSERT_EQ(want[i].second.v[k], data.tensors[i].second.v[k]) << want[i].first;
  }
}

TEST(TrainPhase1, TelemetryStepCountEqualsTotalSteps) {
  PhaseConfig cfg = toy_config(1, "p1_tel");
  cfg.total_steps = 50;
  cfg.eval_every = 25;
  cfg.eval_episodes = 2;
  TrainResult res = train_phase1(cfg);
  EXPECT_EQ(res.steps, 50);

  auto lines = read_jsonl(res.telemetry_path);
  long step_lines = 0, eval_lines = 0, episode_lines = 0;
  long last_step = 0;
  for (const auto& j : lines) {
    std::string type = j.at("type");
    if (type == "step") {
      ++step_lines;
      EXPECT_EQ(j.at("step").get<long>(), last_step + 1);
      last_step = j.at("step").get<long>();
    } else if (type == "eval") {
      ++eval_lines;
    } else if (type == "episode") {
      ++episode_lines;
    }
  }
  EXPECT_EQ(step_lines, cfg.total_steps);
  EXPECT_EQ(eval_lines, 3);  // step 25, step 50, final
  EXPECT_GE(episode_lines, 2);
  EXPECT_GE(res.last_eval_success, 0.0);
}

TEST(TrainPhase1, RerunIsByteIdentical) {
  PhaseConfig a = toy_config(1, "p1_repro_a");
  a.total_steps = 40;
  a.eval_every = 20;
  a.eval_episodes = 2;
  PhaseConfig b = a;
  b.out_dir = temp_dir("p1_repro_b");
  TrainResult ra = train_phase1(a);
  TrainResult rb = train_phase1(b);

  auto read_bytes = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(read_bytes(ra.telemetry_path), read_bytes(rb.telemetry_path));
  EXPECT_EQ(read_bytes(ra.checkpoint_path), read_bytes(rb.checkpoint_path));
}

TEST(TrainPhase1, DivergenceAbortsWithLastGoodCheckpoint) {
  PhaseConfig cfg = toy_config(1, "p1_div");
  cfg.total_steps = 400;
  cfg.warmup_steps = 2;
  cfg.batch_size = 4;
  cfg.sac.lr_actor = 1e18;
  cfg.sac.lr_critic = 1e18;
  TrainResult res = train_phase1(cfg);
  EXPECT_TRUE(res.diverged);
  EXPECT_LT(res.steps, 400);

  CheckpointData<float> data = read_checkpoint<float>(res.checkpoint_path);
  for (const auto& [name, t] : data.tensors) EXPECT_TRUE(t.all_finite()) << name;
  auto lines = read_jsonl(res.telemetry_path);
  ASSERT_FALSE(lines.empty());
  EXPECT_EQ(lines.back().at("type"), "abort");
}

TEST(TrainPhase1, InterruptAndResumeKeepStepNumberingContinuous) {
  PhaseConfig cfg = toy_config(1, "p1_resume");
  cfg.total_steps = 300;
  cfg.warmup_steps = 20;
  std::atomic<bool> stop{false};
  std::thread trigger([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    stop.store(true);
  });
  TrainResult first = train_phase1(cfg, "", &stop);
  trigger.join();

  if (first.interrupted) {
    EXPECT_LT(first.steps, 300);
    TrainResult second = train_phase1(cfg, first.checkpoint_path);
    EXPECT_EQ(second.steps, 300);
    EXPECT_EQ(second.telemetry_path, first.telemetry_path);
  }
  auto lines = read_jsonl(first.telemetry_path);
  long expect_next = 1;
  for (const auto& j : lines) {
    if (j.at("type") != "step") continue;
    EXPECT_EQ(j.at("step").get<long>(), expect_next) << "gap or duplicate";
    ++expect_next;
  }
  EXPECT_EQ(expect_next, 301);
}

TEST(TrainPhase1, ResumeRefusesMismatchedConfig) {
  PhaseConfig cfg = toy_config(1, "p1_mismatch");
  cfg.total_steps = 5;
  cfg.warmup_steps = 100;
  TrainResult res = train_phase1(cfg);
  PhaseConfig other = cfg;
  other.sac.gamma = 0.5;
  EXPECT_THROW(train_phase1(other, res.checkpoint_path), CheckpointError);
}

// Shared setup: a zero-step phase-1 run provides the frozen low checkpoint.
std::string make_low_checkpoint(const std::string& leaf) {
  PhaseConfig cfg = toy_config(1, leaf);
  cfg.total_steps = 0;
  return train_phase1(cfg).checkpoint_path;
}

PhaseConfig toy_phase2(const std::string& leaf, const std::string& low_ckpt) {
  PhaseConfig cfg = toy_config(2, leaf);
  cfg.phase = 2;
  cfg.low_checkpoint = low_ckpt;
  cfg.total_steps = 40;
  cfg.episode_cap = 8;  // too short to cover the start-goal separation
  cfg.warmup_steps = 10;
  cfg.batch_size = 8;
  return cfg;
}

TEST(TrainPhase2, HerOffAllFailuresLeaveOnlyMinusOneRewards) {
  std::string low = make_low_checkpoint("p2_low_a");
  PhaseConfig cfg = toy_phase2("p2_heroff", low);
  cfg.her = false;
  TrainResult res = train_phase2(cfg);
  EXPECT_FALSE(res.diverged);
  EXPECT_EQ(res.steps, 40);
  EXPECT_EQ(res.buffer_size, 40);       // 5 episodes x 8 raw transitions
  EXPECT_EQ(res.buffer_reward_zero, 0); // every reward is -1
}

TEST(TrainPhase2, HerOnInsertsRewardZeroRelabels) {
  std::string low = make_low_checkpoint("p2_low_b");
  PhaseConfig cfg = toy_phase2("p2_heron", low);
  cfg.her = true;
  cfg.her_k = 4;
  TrainResult res = train_phase2(cfg);
  EXPECT_FALSE(res.diverged);
  EXPECT_EQ(res.buffer_size, 40 + 4 * 40);  // raw + k relabels per step
  EXPECT_GE(res.buffer_reward_zero, 5);     // last step of each episode relabels to itself
  EXPECT_GT(res.buffer_reward_zero, 0);
}

TEST(TrainPhase2, LowLevelHashRecordedAndInvariant) {
  std::string low = make_low_checkpoint("p2_low_c");
  PhaseConfig cfg = toy_phase2("p2_hash", low);
  TrainResult res = train_phase2(cfg);
  ActorNet<float> net = load_actor_checkpoint(low, low_net_shape(cfg));
  EXPECT_EQ(res.low_params_hash, params_hash(net.p));

  CheckpointData<float> data = read_checkpoint<float>(res.checkpoint_path);
  nlohmann::json meta = nlohmann::json::parse(data.meta);
  EXPECT_EQ(meta.at("low_hash").get<std::uint64_t>(), res.low_params_hash);
  EXPECT_EQ(meta.at("phase").get<int>(), 2);
}

TEST(TrainPhase2, MissingLowCheckpointRejected) {
  PhaseConfig cfg = toy_phase2("p2_nolow", "");
  EXPECT_THROW(train_phase2(cfg), TrainError);
  cfg.low_checkpoint = cfg.out_dir + "/does_not_exist.ckpt";
  EXPECT_ANY_THROW(train_phase2(cfg));
}

TEST(TrainRunDir, NamedByConfigHashAndSeed) {
  PhaseConfig cfg = toy_config(1, "p1_dirname");
  cfg.total_steps = 0;
  TrainResult res = train_phase1(cfg);
  std::string dir = std::filesystem::path(res.run_dir).filename().string();
  EXPECT_EQ(dir, "p1-" + detail::hex64(config_hash(cfg)) + "-s" + std::to_string(cfg.seed));
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(res.run_dir) / "config.json"));
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(res.run_dir) / "meta.json"));
}

}  // namespace
}  // namespace navskills
