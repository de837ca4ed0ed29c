#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "navskills/policies.hpp"
#include "navskills/rewards.hpp"
#include "navskills/world.hpp"

namespace navskills {

struct DwaParams {
  int n_v = 11;             // window samples per axis
  int n_w = 11;
  double horizon = 1.5;     // seconds of forward simulation
  double sim_dt = 0.1;      // arc integration step
  double accel_v = 0.5;     // m/s^2; window spans accel * horizon around current vel
  double accel_w = 2.0;     // rad/s^2
  double w_heading = 0.8;
  double w_clearance = 0.2;
  double w_velocity = 0.1;
  double clearance_cap = 2.0;  // clearance normalization bound, meters
  double robot_radius = 0.3;
  // Arcs ending within this distance of the goal count as perfectly headed;
  // without it the bearing error blows up on final approach and the planner
  // parks just outside the goal radius.
  double goal_tolerance = 0.3;
  ActionLimits limits;

  void validate() const {
    if (n_v < 1 || n_w < 1) throw std::invalid_argument("DwaParams: window needs >= 1 sample");
    if (horizon <= 0.0 || sim_dt <= 0.0 || sim_dt > horizon)
      throw std::invalid_argument("DwaParams: bad horizon/sim_dt");
    if (clearance_cap <= 0.0 || robot_radius <= 0.0)
      throw std::invalid_argument("DwaParams: bad clearance/radius");
    if (goal_tolerance < 0.0) throw std::invalid_argument("DwaParams: negative goal_tolerance");
  }
};

struct DwaCommand {
  double v = 0.0;
  double w = 0.0;
  bool emergency = false;
  double score = 0.0;
};

namespace detail {

// Scan rays as obstacle points in the robot frame; free rays (full range)
// contribute nothing.
inline std::vector<Vec2> scan_points(const std::vector<double>& scan, double max_range) {
  std::vector<Vec2> pts;
  pts.reserve(scan.size());
  const int n = static_cast<int>(scan.size());
  for (int i = 0; i < n; ++i) {
    double r = scan[i] * max_range;
    if (r >= max_range * (1.0 - 1e-9)) continue;
    double b = 2.0 * kPi * i / n;
    pts.push_back({r * std::cos(b), r * std::sin(b)});
  }
  return pts;
}

// Minimum clearance along the simulated arc; negative means collision.
inline double arc_clearance(double v, double w, const std::vector<Vec2>& pts,
                            const DwaParams& p) {
  double clear = p.clearance_cap;
  Pose pose{0.0, 0.0, 0.0};
  int steps = static_cast<int>(std::ceil(p.horizon / p.sim_dt - 1e-9));
  for (int k = 0; k < steps; ++k) {
    pose = step_kinematics(pose, v, w, p.sim_dt);
    for (const auto& q : pts) {
      double d = (q - pose.position()).norm() - p.robot_radius;
      if (d < clear) clear = d;
    }
  }
  if (pts.empty()) return p.clearance_cap;
  // Standing still must also respect points already inside the radius.
  for (const auto& q : pts) {
    double d = q.norm() - p.robot_radius;
    if (d < clear) clear = d;
  }
  return clear;
}

inline Pose arc_end(double v, double w, const DwaParams& p) {
  Pose pose{0.0, 0.0, 0.0};
  int steps = static_cast<int>(std::ceil(p.horizon / p.sim_dt - 1e-9));
  for (int k = 0; k < steps; ++k) pose = step_kinematics(pose, v, w, p.sim_dt);
  return pose;
}

// Window sample with exact endpoints; a range symmetric about zero yields
// exactly mirrored samples (and an exact zero at the center for odd n). The
// center-based form keeps that true even when the compiler contracts the
// multiply-add into an FMA.
inline double grid_point(double lo, double hi, int idx, int n) {
  if (idx == 0 || n == 1) return lo;
  if (idx == n - 1) return hi;
  double mid = 0.5 * (lo + hi);
  double half = 0.5 * (hi - lo);
  double u = static_cast<double>(2 * idx - (n - 1)) / (n - 1);
  return mid + half * u;
}

}  // namespace detail

// Classic dynamic window step over a single scan. Scores each admissible
// (v, w) by weighted heading / clearance / velocity, rejecting arcs whose
// simulated horizon collides; exact ties break to lowest |w|, then highest v.
// When every arc collides the emergency command spins in place toward the
// side with more free range.
inline DwaCommand dwa_command(const StateHigh& s, const DwaParams& p, double max_range) {
  p.validate();
  if (s.scan.empty()) throw std::invalid_argument("dwa_command: empty scan");
  std::vector<Vec2> pts = detail::scan_points(s.scan, max_range);
  Vec2 goal{s.goal_dist * std::cos(s.goal_bearing), s.goal_dist * std::sin(s.goal_bearing)};

  double v_lo = std::max(p.limits.v_min, s.v - p.accel_v * p.horizon);
  double v_hi = std::min(p.limits.v_max, s.v + p.accel_v * p.horizon);
  double w_lo = std::max(-p.limits.w_abs, s.w - p.accel_w * p.horizon);
  double w_hi = std::min(p.limits.w_abs, s.w + p.accel_w * p.horizon);

  DwaCommand best;
  bool found = false;
  for (int i = 0; i < p.n_v; ++i) {
    double v = detail::grid_point(v_lo, v_hi, i, p.n_v);
    for (int j = 0; j < p.n_w; ++j) {
      double w = detail::grid_point(w_lo, w_hi, j, p.n_w);
      double clear = detail::arc_clearance(v, w, pts, p);
      if (clear <= 0.0) continue;
      Pose end = detail::arc_end(v, w, p);
      Vec2 to_goal = goal - end.position();
      double err = to_goal.norm() > p.goal_tolerance
                       ? std::abs(wrap_angle(std::atan2(to_goal.y, to_goal.x) - end.theta))
                       : 0.0;
      double heading = 1.0 - err / kPi;
      double clearance = std::min(clear, p.clearance_cap) / p.clearance_cap;
      double velocity = (v - p.limits.v_min) / (p.limits.v_max - p.limits.v_min);
      double score = p.w_heading * heading + p.w_clearance * clearance + p.w_velocity * velocity;
      bool better = !found || score > best.score ||
                    (score == best.score &&
                     (std::abs(w) < std::abs(best.w) ||
                      (std::abs(w) == std::abs(best.w) && v > best.v)));
      if (better) {
        best.v = v;
        best.w = w;
        best.score = score;
        found = true;
      }
    }
  }
  if (found) return best;

  // Every arc collides: stop and spin toward the side with more free range.
  double left = 0.0, right = 0.0;
  const int n = static_cast<int>(s.scan.size());
  for (int i = 0; i < n; ++i) {
    double b = wrap_angle(2.0 * kPi * i / n);
    if (b > 0.0)
      left += s.scan[i];
    else if (b < 0.0)
      right += s.scan[i];
  }
  DwaCommand out;
  out.emergency = true;
  out.v = 0.0;
  out.w = left >= right ? p.limits.w_abs : -p.limits.w_abs;
  return out;
}

// Policy adapter so the DWA baseline drops into the eval harness.
class DwaPolicy : public Policy {
 public:
  DwaPolicy(DwaParams params, double max_range) : p_(params), max_range_(max_range) {
    p_.validate();
  }

  std::vector<double> act(const StateHigh& s, Rng*) override {
    DwaCommand c = dwa_command(s, p_, max_range_);
    auto [nv, nw] = normalize_action(c.v, c.w, p_.limits);
    return {nv, nw};
  }

 private:
  DwaParams p_;
  double max_range_;
};

}  // namespace navskills
