#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "navskills/env.hpp"
#include "navskills/hashing.hpp"
#include "navskills/policies.hpp"

namespace navskills {

// Which level's transitions a rollout should emit.
enum class TransitionLevel { none, low, high };

struct EpisodeStep {
  std::vector<double> action;  // tanh units as emitted by the policy
  double v = 0.0, w = 0.0;     // applied command
  Pose pose;                   // post-step
  double reward_low = 0.0;
  double reward_high = -1.0;
  double goal_dist = 0.0;
  double clearance = 0.0;
  bool has_skill = false;
  SkillVector skill;
  Done done = Done::none;
};

struct EpisodeLog {
  std::vector<EpisodeStep> steps;
  Done outcome = Done::none;
  double return_low = 0.0;
  double return_high = 0.0;
  double path_length = 0.0;
  double dt = 0.1;
  long episode_id = 0;

  int length() const { return static_cast<int>(steps.size()); }
  double duration() const { return steps.size() * dt; }
  double min_clearance() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : steps) m = std::min(m, s.clearance);
    return m;
  }
  double mean_abs_w() const {
    if (steps.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& s : steps) sum += std::abs(s.w);
    return sum / steps.size();
  }
  double mean_v() const {
    if (steps.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& s : steps) sum += s.v;
    return sum / steps.size();
  }
};

namespace detail {

inline void hash_append(std::string& buf, const void* p, std::size_t n) {
  buf.append(static_cast<const char*>(p), n);
}

inline void hash_append(std::string& buf, double x) { hash_append(buf, &x, sizeof(x)); }

}  // namespace detail

// Order- and bit-pattern-sensitive digest of a rollout, for determinism checks.
inline std::uint64_t episode_log_hash(const EpisodeLog& log) {
  std::string buf;
  buf.reserve(log.steps.size() * 96);
  for (const auto& s : log.steps) {
    for (double a : s.action) detail::hash_append(buf, a);
    detail::hash_append(buf, s.v);
    detail::hash_append(buf, s.w);
    detail::hash_append(buf, s.pose.x);
    detail::hash_append(buf, s.pose.y);
    detail::hash_append(buf, s.pose.theta);
    detail::hash_append(buf, s.reward_low);
    detail::hash_append(buf, s.reward_high);
    detail::hash_append(buf, s.goal_dist);
    detail::hash_append(buf, s.clearance);
    if (s.has_skill)
      for (int i = 0; i < SkillVector::dim; ++i) detail::hash_append(buf, s.skill[i]);
    char d = static_cast<char>(s.done);
    buf.push_back(d);
  }
  char o = static_cast<char>(log.outcome);
  buf.push_back(o);
  detail::hash_append(buf, log.path_length);
  return fnv1a64(buf.data(), buf.size());
}

// Drives one episode to termination (the env's time cap guarantees one).
// level selects which transitions land in *out: low stores the command with
// the episode skill and the low-level reward; high stores the skill decision
// in tanh units with the sparse high-level reward.
inline EpisodeLog run_episode(NavEnv& env, Policy& policy, Rng* action_rng,
                              TransitionLevel level = TransitionLevel::none,
                              std::vector<Transition>* out = nullptr) {
  if (level != TransitionLevel::none && out == nullptr)
    throw PolicyError("run_episode: transition level set but no output vector");
  EpisodeLog log;
  log.dt = env.dt();
  log.episode_id = env.episode_id();
  while (env.done() == Done::none) {
    StateHigh s = env.observe();
    std::vector<double> a = policy.act(s, action_rng);
    const SkillVector* skill = policy.last_skill();
    StepOutcome res = env.step(a, skill);

    EpisodeStep step;
    step.action = a;
    auto [v, w] = denormalize_action(a[0], a[1], env.config().mdp.limits);
    step.v = v;
    step.w = w;
    step.pose = res.tr.next_pose;
    step.reward_low = skill != nullptr ? res.low_reward : 0.0;
    step.reward_high = res.high_reward;
    step.goal_dist = env.goal_dist();
    step.clearance = res.tr.d_t_next;
    if (skill != nullptr) {
      step.has_skill = true;
      step.skill = *skill;
    }
    step.done = res.done;
    log.return_low += step.reward_low;
    log.return_high += step.reward_high;
    log.steps.push_back(std::move(step));

    if (level == TransitionLevel::low) {
      if (skill == nullptr)
        throw PolicyError("run_episode: low-level transitions need a skill-tagged policy");
      Transition tr = res.tr;
      tr.action = {static_cast<float>(a[0]), static_cast<float>(a[1])};
      tr.reward = static_cast<float>(res.low_reward);
      out->push_back(std::move(tr));
    } else if (level == TransitionLevel::high) {
      const std::vector<double>* ha = policy.last_high_action();
      if (ha == nullptr)
        throw PolicyError("run_episode: high-level transitions need a hierarchical policy");
      Transition tr = res.tr;
      tr.action.resize(ha->size());
      for (std::size_t i = 0; i < ha->size(); ++i)
        tr.action[i] = static_cast<float>((*ha)[i]);
      tr.reward = static_cast<float>(res.high_reward);
      tr.has_skill = false;
      tr.skill = SkillVector{};
      out->push_back(std::move(tr));
    }
  }
  log.outcome = env.done();
  log.path_length = env.path_length();
  return log;
}

}  // namespace navskills
