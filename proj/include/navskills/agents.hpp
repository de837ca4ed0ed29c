#pragma once

#include "navskills/astar.hpp"
#include "navskills/world.hpp"

namespace navskills {

struct AgentGains {
  double repulse_range = 1.5;  // meters, obstacles beyond this are ignored
  double repulse_gain = 0.6;
  double waypoint_reached = 0.3;
  double lookahead = 2.0;
  int replan_tries = 20;
};

// Farthest path point within lookahead that the agent can see on the grid;
// falls back to the nearest path point.
inline Vec2 next_subgoal(const DynamicAgent& agent, const std::vector<Vec2>& path,
                         const Grid& grid, double lookahead) {
  if (path.empty()) throw std::invalid_argument("next_subgoal: empty path");
  Vec2 pos = agent.pose.position();
  GridCell from = cell_of(grid, pos);
  // nearest point as fallback
  std::size_t nearest = 0;
  double best = (path[0] - pos).norm();
  for (std::size_t i = 1; i < path.size(); ++i) {
    double d = (path[i] - pos).norm();
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  Vec2 chosen = path[nearest];
  for (std::size_t i = nearest; i < path.size(); ++i) {
    if ((path[i] - pos).norm() > lookahead) break;
    if (grid_line_of_sight(grid, from, cell_of(grid, path[i]))) chosen = path[i];
  }
  return chosen;
}

// Attraction to the sub-goal plus short-range repulsion from walls, circles,
// the robot, and other agents. Returns a holonomic velocity command with
// |v| <= speed_pref. Deterministic: the agent rng is only used for replanning.
inline Vec2 dynamic_agent_step(const DynamicAgent& agent, const World& world,
                               const Vec2& subgoal, double dt,
                               const AgentGains& gains = {}) {
  if (dt <= 0.0) throw std::invalid_argument("dynamic_agent_step: dt must be positive");
  Vec2 pos = agent.pose.position();
  Vec2 cmd = unit_or_zero(subgoal - pos) * agent.speed_pref;

  auto add_repulsion = [&](const Vec2& obstacle_point, double surface_dist) {
    if (surface_dist >= gains.repulse_range) return;
    double d = std::max(surface_dist, 0.02);
    double mag = gains.repulse_gain * (1.0 / d - 1.0 / gains.repulse_range);
    cmd = cmd + unit_or_zero(pos - obstacle_point) * mag;
  };

  if (world.grid) {
    double wall = world.grid->nearest_obstacle_distance(pos.x, pos.y, gains.repulse_range + agent.radius);
    if (wall - agent.radius < gains.repulse_range) {
      // push away from the wall along the local distance gradient
      double h = 0.5 * world.grid->cell_size();
      double gx = world.grid->nearest_obstacle_distance(pos.x + h, pos.y, 3.0) -
                  world.grid->nearest_obstacle_distance(pos.x - h, pos.y, 3.0);
      double gy = world.grid->nearest_obstacle_distance(pos.x, pos.y + h, 3.0) -
                  world.grid->nearest_obstacle_distance(pos.x, pos.y - h, 3.0);
      double d = std::max(wall - agent.radius, 0.02);
      double mag = gains.repulse_gain * (1.0 / d - 1.0 / gains.repulse_range);
      cmd = cmd + unit_or_zero({gx, gy}) * mag;
    }
  }
  for (const auto& c : world.static_circles)
    add_repulsion(c.center, (pos - c.center).norm() - c.radius - agent.radius);
  add_repulsion(world.robot.pose.position(),
                (pos - world.robot.pose.position()).norm() - world.robot.radius - agent.radius);
  for (const auto& other : world.agents) {
    if (&other == &agent) continue;
    add_repulsion(other.pose.position(),
                  (pos - other.pose.position()).norm() - other.radius - agent.radius);
  }

  double speed = cmd.norm();
  if (speed > agent.speed_pref) cmd = cmd * (agent.speed_pref / speed);
  return cmd;
}

namespace detail {

inline void replan_agent(DynamicAgent& agent, const World& world, const AgentGains& gains) {
  const Grid& plan = world.plan_grid ? *world.plan_grid : *world.grid;
  GridCell from = cell_of(plan, agent.pose.position());
  if (plan.occupied(from.x, from.y)) return;  // stuck inside inflation; stay put
  for (int attempt = 0; attempt < gains.replan_tries; ++attempt) {
    GridCell target{agent.rng.uniform_int(0, plan.width() - 1),
                    agent.rng.uniform_int(0, plan.height() - 1)};
    if (plan.occupied(target.x, target.y)) continue;
    try {
      GridPath path = astar_plan(plan, from, target);
      agent.waypoints.clear();
      for (const auto& c : path.cells) agent.waypoints.push_back(cell_center(plan, c));
      return;
    } catch (const PathNotFound&) {
      continue;
    }
  }
}

inline void advance_agents(World& world, double dt, const AgentGains& gains) {
  if (!world.grid) return;
  const Grid& plan = world.plan_grid ? *world.plan_grid : *world.grid;
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    DynamicAgent& agent = world.agents[i];
    Vec2 pos = agent.pose.position();
    while (!agent.waypoints.empty() &&
           (agent.waypoints.front() - pos).norm() < gains.waypoint_reached)
      agent.waypoints.erase(agent.waypoints.begin());
    if (agent.waypoints.empty()) replan_agent(agent, world, gains);
    if (agent.waypoints.empty()) continue;
    Vec2 sub = next_subgoal(agent, agent.waypoints, plan, gains.lookahead);
    Vec2 cmd = dynamic_agent_step(agent, world, sub, dt, gains);
    agent.pose.x += cmd.x * dt;
    agent.pose.y += cmd.y * dt;
    if (cmd.norm() > 1e-9) agent.pose.theta = std::atan2(cmd.y, cmd.x);
  }
}

}  // namespace detail

// Advance robot and every dynamic agent by one control period. Deterministic
// given the world state (agents carry their own rng streams and run in index
// order).
inline void world_step_inplace(World& world, double v, double w, double dt,
                               const AgentGains& gains = {}) {
  world.robot.pose = step_kinematics(world.robot.pose, v, w, dt);
  world.robot.v = v;
  world.robot.w = w;
  detail::advance_agents(world, dt, gains);
  ++world.time_step_index;
}

inline World world_step(const World& world, double v, double w, double dt,
                        const AgentGains& gains = {}) {
  World next = world;
  world_step_inplace(next, v, w, dt, gains);
  return next;
}

}  // namespace navskills
