#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "navskills/geometry.hpp"
#include "navskills/grid.hpp"
#include "navskills/rng.hpp"

namespace navskills {

struct Scan {
  std::vector<double> ranges;  // meters, each in (0, max_range]
};

// Simulated pedestrian: a holonomic disc driven by the controller in
// agents.hpp. waypoints holds the remaining global path (world coords,
// front = next).
struct DynamicAgent {
  Pose pose;
  double radius = 0.3;
  double speed_pref = 1.0;  // m/s, in (0, 1]
  std::vector<Vec2> waypoints;
  Rng rng;
};

struct RobotState {
  Pose pose;
  double radius = 0.3;
  double v = 0.0;  // last applied command
  double w = 0.0;
};

struct World {
  GridPtr grid;       // walls and rasterized blocks
  GridPtr plan_grid;  // grid inflated for point planning; set by the scenario builder
  std::vector<Circle> static_circles;
  std::vector<DynamicAgent> agents;
  RobotState robot;
  Vec2 goal;
  long time_step_index = 0;
};

inline World make_empty_world(double width_m, double height_m, double cell_size = 0.1) {
  World w;
  auto g = std::make_shared<Grid>(static_cast<int>(std::lround(width_m / cell_size)),
                                  static_cast<int>(std::lround(height_m / cell_size)),
                                  cell_size);
  g->finalize();
  w.grid = g;
  return w;
}

// Closed-form unicycle arc. Straight-line fallback below |w| = 1e-6 where the
// arc expressions lose precision.
inline Pose step_kinematics(const Pose& pose, double v, double w, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("step_kinematics: dt must be positive");
  Pose out = pose;
  if (v == 0.0 && w == 0.0) return out;
  if (std::abs(w) < 1e-6) {
    out.x += v * dt * std::cos(pose.theta);
    out.y += v * dt * std::sin(pose.theta);
    out.theta = wrap_angle(pose.theta + w * dt);
    return out;
  }
  double r = v / w;
  double th1 = pose.theta + w * dt;
  out.x += r * (std::sin(th1) - std::sin(pose.theta));
  out.y += r * (std::cos(pose.theta) - std::cos(th1));
  out.theta = wrap_angle(th1);
  return out;
}

inline bool point_in_obstacle(const World& world, double px, double py) {
  if (world.grid && world.grid->occupied_at(px, py)) return true;
  for (const auto& c : world.static_circles)
    if ((Vec2{px, py} - c.center).norm() <= c.radius) return true;
  for (const auto& a : world.agents)
    if ((Vec2{px, py} - a.pose.position()).norm() <= a.radius) return true;
  return false;
}

namespace detail {

// Amanatides-Woo traversal; returns distance to the first occupied cell
// entered, or max_range.
inline double raycast_grid(const Grid& g, const Vec2& o, const Vec2& d, double max_range) {
  double cs = g.cell_size();
  int cx = static_cast<int>(std::floor(o.x / cs));
  int cy = static_cast<int>(std::floor(o.y / cs));
  int step_x = d.x > 0 ? 1 : (d.x < 0 ? -1 : 0);
  int step_y = d.y > 0 ? 1 : (d.y < 0 ? -1 : 0);
  double inf = std::numeric_limits<double>::infinity();
  double t_max_x = inf, t_max_y = inf, t_dx = inf, t_dy = inf;
  if (step_x != 0) {
    double next = (step_x > 0 ? (cx + 1) * cs : cx * cs);
    t_max_x = (next - o.x) / d.x;
    t_dx = cs / std::abs(d.x);
  }
  if (step_y != 0) {
    double next = (step_y > 0 ? (cy + 1) * cs : cy * cs);
    t_max_y = (next - o.y) / d.y;
    t_dy = cs / std::abs(d.y);
  }
  // origin cell occupied is handled by the caller's embedded-pose check
  double t = 0.0;
  while (t <= max_range) {
    if (t_max_x < t_max_y) {
      t = t_max_x;
      t_max_x += t_dx;
      cx += step_x;
    } else {
      t = t_max_y;
      t_max_y += t_dy;
      cy += step_y;
    }
    if (t > max_range) break;
    if (g.occupied(cx, cy)) return t;
  }
  return max_range;
}

}  // namespace detail

// Range along a single bearing (radians, world frame), from the robot center.
inline double raycast_single(const World& world, const Vec2& origin, double bearing,
                             double max_range) {
  Vec2 d{std::cos(bearing), std::sin(bearing)};
  double best = max_range;
  if (world.grid) best = detail::raycast_grid(*world.grid, origin, d, max_range);
  for (const auto& c : world.static_circles) {
    double t = ray_circle_hit(origin, d, c);
    if (t >= 0.0 && t < best) best = t;
  }
  for (const auto& a : world.agents) {
    double t = ray_circle_hit(origin, d, Circle{a.pose.position(), a.radius});
    if (t >= 0.0 && t < best) best = t;
  }
  return best;
}

// 512 rays over 360 degrees by default; ray i points at theta + 2*pi*i/n.
// A pose embedded in an obstacle reports the minimum positive range on every
// ray instead of failing. Optional additive Gaussian noise, clamped so ranges
// stay in (0, max_range].
inline Scan raycast_scan(const World& world, const Pose& pose, int n_rays = 512,
                         double max_range = 6.0, double noise_sigma = 0.0,
                         Rng* noise_rng = nullptr) {
  if (n_rays < 1) throw std::invalid_argument("raycast_scan: n_rays must be >= 1");
  if (max_range <= 0.0) throw std::invalid_argument("raycast_scan: max_range must be positive");
  constexpr double kMinRange = 1e-3;
  Scan scan;
  scan.ranges.resize(n_rays);
  Vec2 origin = pose.position();
  if (point_in_obstacle(world, origin.x, origin.y)) {
    for (auto& r : scan.ranges) r = kMinRange;
    return scan;
  }
  for (int i = 0; i < n_rays; ++i) {
    double bearing = pose.theta + 2.0 * kPi * i / n_rays;
    double r = raycast_single(world, origin, bearing, max_range);
    if (noise_sigma > 0.0 && noise_rng != nullptr)
      r += noise_sigma * noise_rng->normal();
    scan.ranges[i] = std::clamp(r, kMinRange, max_range);
  }
  return scan;
}

inline bool check_collision(const World& world, const Pose& pose, double radius) {
  if (radius <= 0.0) throw std::invalid_argument("check_collision: radius must be positive");
  if (world.grid && world.grid->disc_hits(pose.x, pose.y, radius)) return true;
  for (const auto& c : world.static_circles)
    if ((pose.position() - c.center).norm() <= radius + c.radius) return true;
  for (const auto& a : world.agents)
    if ((pose.position() - a.pose.position()).norm() <= radius + a.radius) return true;
  return false;
}

// Distance from the robot boundary to the nearest obstacle surface, capped.
// Negative (or zero) in collision. Empty world reports cap.
inline double min_obstacle_distance(const World& world, const Pose& pose,
                                    double cap = 6.0) {
  double r = world.robot.radius;
  double surface = cap + r;
  if (world.grid)
    surface = std::min(surface, world.grid->nearest_obstacle_distance(pose.x, pose.y, cap + r));
  for (const auto& c : world.static_circles)
    surface = std::min(surface, (pose.position() - c.center).norm() - c.radius);
  for (const auto& a : world.agents)
    surface = std::min(surface, (pose.position() - a.pose.position()).norm() - a.radius);
  return std::min(surface - r, cap);
}

}  // namespace navskills
