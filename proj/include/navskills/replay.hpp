#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "navskills/rewards.hpp"
#include "navskills/rng.hpp"

namespace navskills {

// One environment step. Observations are stored as parts (scan, velocities,
// poses, goal) so goal-relabeled copies can rebuild the polar goal component
// against a new goal at batch time.
struct Transition {
  std::vector<float> scan;       // normalized (0,1]
  std::vector<float> next_scan;
  float v = 0.0f, w = 0.0f;            // command units, before the action
  float next_v = 0.0f, next_w = 0.0f;  // after the action
  Pose pose;
  Pose next_pose;
  std::vector<float> action;  // tanh units, length = action dim
  float reward = 0.0f;
  Done done = Done::none;
  Vec2 goal;
  Vec2 achieved;  // position reached after the step
  bool has_skill = false;
  SkillVector skill;
  float d_t_next = 6.0f;  // clearance after the step, for low-reward recompute
  long episode_id = 0;
  int t = 0;
};

struct ReplayError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Seeded uniform ring buffer, FIFO overwrite at capacity.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed)
      : capacity_(capacity), rng_(seed) {
    if (capacity == 0) throw ReplayError("ReplayBuffer: zero capacity");
    storage_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return storage_.size(); }

  void push(Transition tr) {
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(tr));
    } else {
      storage_[cursor_] = std::move(tr);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  const Transition& at(std::size_t i) const { return storage_[i]; }

  std::vector<const Transition*> sample(std::size_t batch_size) {
    if (storage_.empty()) throw ReplayError("ReplayBuffer: sample from empty buffer");
    if (batch_size > storage_.size())
      throw ReplayError("ReplayBuffer: batch exceeds occupancy");
    std::vector<const Transition*> out;
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i)
      out.push_back(&storage_[rng_.uniform_int(0, static_cast<long>(storage_.size()) - 1)]);
    return out;
  }

  Rng& rng() { return rng_; }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> storage_;
  Rng rng_;
};

// (transition, relabeled goal) -> (reward, done) under the new goal.
using RelabelRewardFn =
    std::function<std::pair<double, Done>(const Transition&, const Vec2&)>;

// "future" strategy: for each step, k copies with goals drawn from achieved
// positions at uniformly sampled steps >= the step itself.
inline std::vector<Transition> her_relabel(const std::vector<Transition>& episode, int k,
                                           const RelabelRewardFn& reward_fn, Rng& rng) {
  std::vector<Transition> out;
  if (episode.empty() || k <= 0) return out;
  out.reserve(episode.size() * static_cast<std::size_t>(k));
  const long last = static_cast<long>(episode.size()) - 1;
  for (long i = 0; i <= last; ++i) {
    for (int c = 0; c < k; ++c) {
      long j = rng.uniform_int(i, last);
      Transition copy = episode[i];
      copy.goal = episode[j].achieved;
      auto [r, d] = reward_fn(copy, copy.goal);
      copy.reward = static_cast<float>(r);
      copy.done = d;
      out.push_back(std::move(copy));
    }
  }
  return out;
}

// Sparse high-level relabel rule: 0 when the achieved position lands within
// goal_radius of the new goal, else -1.
inline RelabelRewardFn high_level_relabel_fn(double goal_radius) {
  return [goal_radius](const Transition& tr, const Vec2& goal) {
    bool reached = (tr.achieved - goal).norm() < goal_radius;
    Done d = tr.done == Done::collision ? Done::collision
                                        : (reached ? Done::goal : tr.done);
    return std::pair<double, Done>(high_reward(d), d);
  };
}

}  // namespace navskills
