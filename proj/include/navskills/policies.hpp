#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "navskills/nets.hpp"
#include "navskills/rewards.hpp"

namespace navskills {

struct PolicyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Affine map between the skill box [0, w_max]^5 and tanh units [-1, 1]^5.
inline SkillVector skill_from_tanh(const std::vector<double>& a, double w_max = 0.2) {
  if (a.size() != static_cast<std::size_t>(SkillVector::dim))
    throw PolicyError("skill_from_tanh: expected " + std::to_string(SkillVector::dim) +
                      " components, got " + std::to_string(a.size()));
  SkillVector s;
  for (int i = 0; i < SkillVector::dim; ++i)
    s[i] = (std::clamp(a[i], -1.0, 1.0) + 1.0) * 0.5 * w_max;
  return s;
}

inline std::vector<double> tanh_from_skill(const SkillVector& s, double w_max = 0.2) {
  if (!skill_in_box(s, w_max)) throw PolicyError("tanh_from_skill: skill outside box");
  std::vector<double> a(SkillVector::dim);
  for (int i = 0; i < SkillVector::dim; ++i) a[i] = 2.0 * s[i] / w_max - 1.0;
  return a;
}

// Control policy over high-level observations. act() returns the command in
// tanh units [-1, 1]^2; rng == nullptr means deterministic (mean) actions.
struct Policy {
  virtual ~Policy() = default;
  virtual std::vector<double> act(const StateHigh& s, Rng* rng) = 0;
  // Skill behind the most recent act(), when the policy is skill-structured.
  virtual const SkillVector* last_skill() const { return nullptr; }
  // High-level tanh action behind that skill, for transition storage.
  virtual const std::vector<double>* last_high_action() const { return nullptr; }
};

// High half of the hierarchy: picks a skill (and its tanh-space action) from
// the current state.
struct SkillSource {
  struct Decision {
    std::vector<double> action;  // tanh units, length SkillVector::dim
    SkillVector skill;
  };
  virtual ~SkillSource() = default;
  virtual Decision decide(const StateHigh& s, Rng* rng) = 0;
};

class ConstantSkillSource : public SkillSource {
 public:
  ConstantSkillSource(const SkillVector& skill, double w_max = 0.2) {
    if (!skill_in_box(skill, w_max)) throw PolicyError("ConstantSkillSource: skill outside box");
    dec_.skill = skill;
    dec_.action = tanh_from_skill(skill, w_max);
  }
  Decision decide(const StateHigh&, Rng*) override { return dec_; }

 private:
  Decision dec_;
};

// Neural high level: a skill-free actor whose tanh output is mapped onto the
// skill box.
template <typename T>
class ActorSkillSource : public SkillSource {
 public:
  ActorSkillSource(const ActorNet<T>* net, ObsEncoder enc)
      : net_(net), enc_(std::move(enc)) {
    if (net_ == nullptr) throw PolicyError("ActorSkillSource: null actor");
    if (net_->shape.action_dim != SkillVector::dim)
      throw PolicyError("ActorSkillSource: actor emits " +
                        std::to_string(net_->shape.action_dim) + " dims, skill needs " +
                        std::to_string(SkillVector::dim));
    if (enc_.with_skill) throw PolicyError("ActorSkillSource: high-level encoder takes no skill");
  }

  Decision decide(const StateHigh& s, Rng* rng) override {
    Decision d;
    d.action = actor_act(*net_, s.scan, enc_.aux(s.v, s.w, s.goal_dist, s.goal_bearing), rng);
    d.skill = skill_from_tanh(d.action, enc_.w_max);
    return d;
  }

 private:
  const ActorNet<T>* net_;
  ObsEncoder enc_;
};

// Skill-conditioned low-level controller. With a ConstantSkillSource this is
// the fixed-skill policy; with an ActorSkillSource it is the full hierarchy.
// Both run the identical low-level code path, so composing a constant high
// level reproduces the fixed-skill rollout bit for bit.
template <typename T>
class HierarchicalPolicy : public Policy {
 public:
  HierarchicalPolicy(SkillSource* high, const ActorNet<T>* low, ObsEncoder low_enc)
      : high_(high), low_(low), enc_(std::move(low_enc)) {
    if (high_ == nullptr) throw PolicyError("HierarchicalPolicy: null skill source");
    if (low_ == nullptr) throw PolicyError("HierarchicalPolicy: null low-level actor");
    if (!enc_.with_skill) throw PolicyError("HierarchicalPolicy: low-level encoder needs skill");
  }

  std::vector<double> act(const StateHigh& s, Rng* rng) override {
    last_ = high_->decide(s, rng);
    if (!skill_in_box(last_.skill, enc_.w_max))
      throw PolicyError("HierarchicalPolicy: skill outside box");
    auto aux = enc_.aux(s.v, s.w, s.goal_dist, s.goal_bearing, &last_.skill);
    return actor_act(*low_, s.scan, aux, rng);
  }

  const SkillVector* last_skill() const override { return &last_.skill; }
  const std::vector<double>* last_high_action() const override { return &last_.action; }

 private:
  SkillSource* high_;
  const ActorNet<T>* low_;
  ObsEncoder enc_;
  SkillSource::Decision last_;
};

// Low-level actor driven by one skill for the whole episode.
template <typename T>
class FixedSkillPolicy : public Policy {
 public:
  FixedSkillPolicy(const SkillVector& skill, const ActorNet<T>* low, ObsEncoder low_enc)
      : w_max_(low_enc.w_max), src_(skill, w_max_), inner_(&src_, low, std::move(low_enc)) {}

  // inner_ points at src_; a shallow copy would alias the source object.
  FixedSkillPolicy(const FixedSkillPolicy&) = delete;
  FixedSkillPolicy& operator=(const FixedSkillPolicy&) = delete;

  std::vector<double> act(const StateHigh& s, Rng* rng) override { return inner_.act(s, rng); }
  const SkillVector* last_skill() const override { return inner_.last_skill(); }
  const std::vector<double>* last_high_action() const override {
    return inner_.last_high_action();
  }

  void set_skill(const SkillVector& skill) { src_ = ConstantSkillSource(skill, w_max_); }

 private:
  double w_max_;
  ConstantSkillSource src_;
  HierarchicalPolicy<T> inner_;
};

template <typename T>
FixedSkillPolicy<T> fixed_skill_policy(const SkillVector& skill, const ActorNet<T>* low,
                                       ObsEncoder low_enc) {
  return FixedSkillPolicy<T>(skill, low, std::move(low_enc));
}

}  // namespace navskills
