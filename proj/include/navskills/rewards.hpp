#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "navskills/world.hpp"

namespace navskills {

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Command-unit bounds; the learned policies act in [-1,1]^2.
struct ActionLimits {
  double v_min = 0.0;
  double v_max = 0.5;
  double w_abs = 0.64;
};

struct MdpConfig {
  ActionLimits limits;
  double goal_radius = 0.3;
  int time_cap = 1000;
  double w_max = 0.2;       // skill box upper bound per component
  double max_range = 6.0;   // scan normalization
  int n_rays = 512;
  double gamma = 0.99;
};

// Per-component weights of the low-level reward terms.
struct SkillVector {
  double w_collision = 0.0;
  double w_progress = 0.0;
  double w_v = 0.0;
  double w_w = 0.0;
  double w_safety = 0.0;

  static constexpr int dim = 5;
  double operator[](int i) const {
    switch (i) {
      case 0: return w_collision;
      case 1: return w_progress;
      case 2: return w_v;
      case 3: return w_w;
      default: return w_safety;
    }
  }
  double& operator[](int i) {
    switch (i) {
      case 0: return w_collision;
      case 1: return w_progress;
      case 2: return w_v;
      case 3: return w_w;
      default: return w_safety;
    }
  }
  std::array<double, 5> as_array() const { return {w_collision, w_progress, w_v, w_w, w_safety}; }
  static SkillVector from_array(const std::array<double, 5>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
  }
  bool operator==(const SkillVector&) const = default;
};

inline bool skill_in_box(const SkillVector& s, double w_max = 0.2) {
  for (int i = 0; i < SkillVector::dim; ++i)
    if (!std::isfinite(s[i]) || s[i] < 0.0 || s[i] > w_max) return false;
  return true;
}

// Published baseline skills.
inline SkillVector skill_goal_oriented() { return {0.0, 0.2, 0.1, 0.0, 0.0}; }
inline SkillVector skill_socially_aware() { return {0.1, 0.0, 0.0, 0.1, 0.2}; }
inline SkillVector skill_safe() { return {0.2, 0.0, 0.0, 0.1, 0.1}; }
inline SkillVector skill_mild() { return {0.1, 0.1, 0.1, 0.2, 0.0}; }

inline SkillVector named_skill(const std::string& name) {
  std::string key = name;
  for (char& c : key)
    if (c == '-') c = '_';
  if (key == "goal_oriented") return skill_goal_oriented();
  if (key == "socially_aware") return skill_socially_aware();
  if (key == "safe") return skill_safe();
  if (key == "mild") return skill_mild();
  throw std::runtime_error("named_skill: unknown skill " + name);
}

struct StateHigh {
  std::vector<double> scan;  // ranges normalized by max_range, in (0,1]
  double v = 0.0;
  double w = 0.0;
  double goal_dist = 0.0;
  double goal_bearing = 0.0;
};

struct StateLow {
  StateHigh base;
  SkillVector skill;
};

enum class Done { none, goal, collision, timeout };

inline const char* done_name(Done d) {
  switch (d) {
    case Done::none: return "none";
    case Done::goal: return "goal";
    case Done::collision: return "collision";
    default: return "timeout";
  }
}

inline std::pair<double, double> relative_goal(const Pose& pose, const Vec2& goal) {
  Vec2 d = goal - pose.position();
  double dist = d.norm();
  double bearing = dist > 0.0 ? wrap_angle(std::atan2(d.y, d.x) - pose.theta) : 0.0;
  return {dist, bearing};
}

inline std::pair<double, double> normalize_action(double v, double w,
                                                  const ActionLimits& lim = {}) {
  v = std::clamp(v, lim.v_min, lim.v_max);
  w = std::clamp(w, -lim.w_abs, lim.w_abs);
  double nv = 2.0 * (v - lim.v_min) / (lim.v_max - lim.v_min) - 1.0;
  double nw = w / lim.w_abs;
  return {nv, nw};
}

inline std::pair<double, double> denormalize_action(double nv, double nw,
                                                    const ActionLimits& lim = {}) {
  nv = std::clamp(nv, -1.0, 1.0);
  nw = std::clamp(nw, -1.0, 1.0);
  double v = lim.v_min + (nv + 1.0) * 0.5 * (lim.v_max - lim.v_min);
  double w = nw * lim.w_abs;
  return {v, w};
}

// Penalty ramps linearly from 0 at the zone edge d_t = r + 0.5 down to -1 at
// contact; zero outside the zone.
inline double safety_penalty(double d_t, double r) {
  if (r <= 0.0) throw NumericError("safety_penalty: r must be positive");
  double zone = r + 0.5;
  if (d_t >= zone) return 0.0;
  return -(1.0 - d_t / zone);
}

inline double low_reward(double prev_goal_dist, double cur_goal_dist, double v, double w,
                         double d_t, Done event, const SkillVector& skill,
                         double robot_radius = 0.3) {
  if (!std::isfinite(prev_goal_dist) || !std::isfinite(cur_goal_dist) || !std::isfinite(v) ||
      !std::isfinite(w) || !std::isfinite(d_t))
    throw NumericError("low_reward: non-finite input");
  for (int i = 0; i < SkillVector::dim; ++i)
    if (!std::isfinite(skill[i])) throw NumericError("low_reward: non-finite skill");
  double r_success = event == Done::goal ? 1.0 : 0.0;
  double r_collision = event == Done::collision ? -1.0 : 0.0;
  double r_progress = prev_goal_dist - cur_goal_dist;
  double r_v = v;
  double r_w = -std::abs(w);
  double r_safety = safety_penalty(d_t, robot_radius);
  return r_success + skill.w_collision * r_collision + skill.w_progress * r_progress +
         skill.w_v * r_v + skill.w_w * r_w + skill.w_safety * r_safety;
}

inline double high_reward(Done event) { return event == Done::goal ? 0.0 : -1.0; }

// Priority: collision > goal > timeout > none.
inline Done termination(const World& world, double goal_radius = 0.3, int time_cap = 1000) {
  if (check_collision(world, world.robot.pose, world.robot.radius)) return Done::collision;
  if ((world.goal - world.robot.pose.position()).norm() < goal_radius) return Done::goal;
  if (world.time_step_index >= time_cap) return Done::timeout;
  return Done::none;
}

inline StateHigh assemble_high_state(const Scan& scan, double v, double w, double goal_dist,
                                     double goal_bearing, const MdpConfig& cfg = {}) {
  if (static_cast<int>(scan.ranges.size()) != cfg.n_rays)
    throw ShapeError("assemble_high_state: scan length " + std::to_string(scan.ranges.size()) +
                     " != " + std::to_string(cfg.n_rays));
  StateHigh s;
  s.scan.resize(scan.ranges.size());
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    double r = scan.ranges[i] / cfg.max_range;
    if (!std::isfinite(r)) throw NumericError("assemble_high_state: non-finite range");
    s.scan[i] = std::clamp(r, 0.0, 1.0);
  }
  s.v = v;
  s.w = w;
  s.goal_dist = goal_dist;
  s.goal_bearing = goal_bearing;
  return s;
}

inline StateLow assemble_low_state(const Scan& scan, double v, double w, double goal_dist,
                                   double goal_bearing, const SkillVector& skill,
                                   const MdpConfig& cfg = {}) {
  StateLow s;
  s.base = assemble_high_state(scan, v, w, goal_dist, goal_bearing, cfg);
  s.skill = skill;
  return s;
}

}  // namespace navskills
