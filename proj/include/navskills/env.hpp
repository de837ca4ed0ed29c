#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "navskills/agents.hpp"
#include "navskills/mapgen.hpp"
#include "navskills/replay.hpp"
#include "navskills/rewards.hpp"
#include "navskills/world.hpp"

namespace navskills {

struct EnvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnvConfig {
  MdpConfig mdp;
  double dt = 0.1;          // control period, seconds
  double scan_noise = 0.0;  // additive range noise sigma, meters
  AgentGains gains;
};

// One step, scored at both reward levels. The transition carries everything
// except the fields the caller owns: action, reward, and the skill tag are
// filled by the rollout according to which level is being trained.
struct StepOutcome {
  Transition tr;
  double low_reward = 0.0;  // meaningful only when a skill was supplied
  double high_reward = -1.0;
  Done done = Done::none;
};

// Episode wrapper around World: applies tanh-space commands, advances the
// pedestrians, refreshes the scan, and evaluates termination after each step.
class NavEnv {
 public:
  NavEnv(Scenario sc, EnvConfig cfg, std::uint64_t noise_seed, long episode_id = 0)
      : world_(std::move(sc.world)), cfg_(cfg), rng_(noise_seed), episode_id_(episode_id) {
    if (cfg_.dt <= 0.0) throw EnvError("NavEnv: dt must be positive");
    if (cfg_.mdp.time_cap < 1) throw EnvError("NavEnv: time_cap must be >= 1");
    world_.robot.v = 0.0;
    world_.robot.w = 0.0;
    world_.time_step_index = 0;
    scan_ = normalized_scan();
    refresh_goal_polar();
  }

  const World& world() const { return world_; }
  const EnvConfig& config() const { return cfg_; }
  Done done() const { return done_; }
  int t() const { return t_; }
  double dt() const { return cfg_.dt; }
  double path_length() const { return path_length_; }
  double goal_dist() const { return goal_dist_; }
  long episode_id() const { return episode_id_; }

  StateHigh observe() const {
    StateHigh s;
    s.scan.assign(scan_.begin(), scan_.end());
    s.v = world_.robot.v;
    s.w = world_.robot.w;
    s.goal_dist = goal_dist_;
    s.goal_bearing = goal_bearing_;
    return s;
  }

  // action is the policy output in tanh units [-1,1]^2: (v, w).
  StepOutcome step(const std::vector<double>& action, const SkillVector* skill = nullptr) {
    if (done_ != Done::none) throw EnvError("NavEnv: step after terminal state");
    if (action.size() != 2)
      throw ShapeError("NavEnv: action has " + std::to_string(action.size()) +
                       " components, expected 2");
    if (!std::isfinite(action[0]) || !std::isfinite(action[1]))
      throw NumericError("NavEnv: non-finite action");
    auto [v, w] = denormalize_action(action[0], action[1], cfg_.mdp.limits);

    StepOutcome out;
    Transition& tr = out.tr;
    tr.scan = scan_;
    tr.v = static_cast<float>(world_.robot.v);
    tr.w = static_cast<float>(world_.robot.w);
    tr.pose = world_.robot.pose;
    tr.goal = world_.goal;
    tr.episode_id = episode_id_;
    tr.t = t_;

    double prev_dist = goal_dist_;
    world_step_inplace(world_, v, w, cfg_.dt, cfg_.gains);
    scan_ = normalized_scan();
    refresh_goal_polar();
    done_ = termination(world_, cfg_.mdp.goal_radius, cfg_.mdp.time_cap);
    double d_t = min_obstacle_distance(world_, world_.robot.pose, cfg_.mdp.max_range);
    path_length_ += std::abs(v) * cfg_.dt;
    ++t_;

    tr.next_scan = scan_;
    tr.next_v = static_cast<float>(v);
    tr.next_w = static_cast<float>(w);
    tr.next_pose = world_.robot.pose;
    tr.achieved = world_.robot.pose.position();
    tr.d_t_next = static_cast<float>(d_t);
    tr.done = done_;
    out.done = done_;
    out.high_reward = high_reward(done_);
    if (skill != nullptr) {
      out.low_reward =
          low_reward(prev_dist, goal_dist_, v, w, d_t, done_, *skill, world_.robot.radius);
      tr.has_skill = true;
      tr.skill = *skill;
    }
    return out;
  }

 private:
  std::vector<float> normalized_scan() {
    Scan raw = raycast_scan(world_, world_.robot.pose, cfg_.mdp.n_rays, cfg_.mdp.max_range,
                            cfg_.scan_noise, cfg_.scan_noise > 0.0 ? &rng_ : nullptr);
    std::vector<float> out(raw.ranges.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<float>(raw.ranges[i] / cfg_.mdp.max_range);
    return out;
  }

  void refresh_goal_polar() {
    auto [d, b] = relative_goal(world_.robot.pose, world_.goal);
    goal_dist_ = d;
    goal_bearing_ = b;
  }

  World world_;
  EnvConfig cfg_;
  Rng rng_;
  long episode_id_ = 0;
  std::vector<float> scan_;
  double goal_dist_ = 0.0;
  double goal_bearing_ = 0.0;
  double path_length_ = 0.0;
  int t_ = 0;
  Done done_ = Done::none;
};

}  // namespace navskills
