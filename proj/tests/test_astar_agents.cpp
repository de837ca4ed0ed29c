#include <gtest/gtest.h>

#include <cmath>
#include <queue>

#include "navskills/agents.hpp"
#include "navskills/astar.hpp"

namespace navskills {
namespace {

constexpr double kSqrt2 = 1.41421356237309514547;

// Independent Dijkstra over the same 8-connected move set (no corner cuts).
double dijkstra_cost(const Grid& g, GridCell start, GridCell goal) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(g.width()) * g.height(), inf);
  auto idx = [&](int x, int y) { return static_cast<std::size_t>(y) * g.width() + x; };
  using Item = std::pair<double, std::pair<int, int>>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[idx(start.x, start.y)] = 0.0;
  pq.push({0.0, {start.x, start.y}});
  while (!pq.empty()) {
    auto [d, cell] = pq.top();
    pq.pop();
    auto [x, y] = cell;
    if (d > dist[idx(x, y)]) continue;
    if (x == goal.x && y == goal.y) return d;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= g.width() || ny >= g.height()) continue;
        if (g.occupied(nx, ny)) continue;
        if (dx != 0 && dy != 0 && (g.occupied(x + dx, y) || g.occupied(x, y + dy))) continue;
        double nd = d + (dx != 0 && dy != 0 ? kSqrt2 : 1.0);
        if (nd < dist[idx(nx, ny)]) {
          dist[idx(nx, ny)] = nd;
          pq.push({nd, {nx, ny}});
        }
      }
  }
  return inf;
}

Grid empty_grid(int w, int h) {
  Grid g(w, h, 0.1);
  g.finalize();
  return g;
}

TEST(AstarPlan, StraightFreeLine) {
  Grid g = empty_grid(12, 3);
  GridPath p = astar_plan(g, {1, 1}, {10, 1});
  EXPECT_EQ(p.cells.size(), 10u);
  EXPECT_NEAR(p.length, 9 * 0.1, 1e-12);
  for (const auto& c : p.cells) EXPECT_EQ(c.y, 1);
}

TEST(AstarPlan, WallWithGapMatchesDijkstra) {
  Grid g(21, 21, 0.1);
  for (int y = 0; y < 21; ++y)
    if (y != 10) g.set(10, y, 1);
  g.finalize();
  GridPath p = astar_plan(g, {2, 2}, {18, 18});
  bool through_gap = false;
  for (const auto& c : p.cells)
    if (c.x == 10) {
      EXPECT_EQ(c.y, 10);
      through_gap = true;
    }
  EXPECT_TRUE(through_gap);
  EXPECT_NEAR(p.length / 0.1, dijkstra_cost(g, {2, 2}, {18, 18}), 1e-9);
}

TEST(AstarPlan, GoalInsideWallFails) {
  Grid g(10, 10, 0.1);
  g.set(7, 7, 1);
  g.finalize();
  EXPECT_THROW(astar_plan(g, {1, 1}, {7, 7}), PathNotFound);
  EXPECT_THROW(astar_plan(g, {7, 7}, {1, 1}), PathNotFound);
}

TEST(AstarPlan, UnreachableFails) {
  Grid g(10, 10, 0.1);
  for (int y = 0; y < 10; ++y) g.set(5, y, 1);
  g.finalize();
  EXPECT_THROW(astar_plan(g, {2, 2}, {8, 8}), PathNotFound);
}

// Cost optimality and corner-cut audit on random 64x64 grids.
TEST(AstarPlan, MatchesDijkstraOnRandomGrids) {
  Rng rng(2024);
  int compared = 0;
  for (int trial = 0; trial < 12; ++trial) {
    Grid g(64, 64, 0.1);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        if (rng.uniform() < 0.25) g.set(x, y, 1);
    g.finalize();
    GridCell start{rng.uniform_int(0, 63), rng.uniform_int(0, 63)};
    GridCell goal{rng.uniform_int(0, 63), rng.uniform_int(0, 63)};
    if (g.occupied(start.x, start.y) || g.occupied(goal.x, goal.y)) continue;
    double oracle = dijkstra_cost(g, start, goal);
    if (std::isinf(oracle)) {
      EXPECT_THROW(astar_plan(g, start, goal), PathNotFound);
      continue;
    }
    GridPath p = astar_plan(g, start, goal);
    EXPECT_NEAR(p.length / 0.1, oracle, 1e-9);
    for (std::size_t i = 1; i < p.cells.size(); ++i) {
      int dx = p.cells[i].x - p.cells[i - 1].x;
      int dy = p.cells[i].y - p.cells[i - 1].y;
      EXPECT_LE(std::abs(dx), 1);
      EXPECT_LE(std::abs(dy), 1);
      EXPECT_FALSE(g.occupied(p.cells[i].x, p.cells[i].y));
      if (dx != 0 && dy != 0) {
        EXPECT_FALSE(g.occupied(p.cells[i - 1].x + dx, p.cells[i - 1].y));
        EXPECT_FALSE(g.occupied(p.cells[i - 1].x, p.cells[i - 1].y + dy));
      }
    }
    ++compared;
  }
  EXPECT_GE(compared, 6);
}

std::vector<Vec2> straight_path(double y, double x0, double x1, double step) {
  std::vector<Vec2> out;
  int n = static_cast<int>(std::lround((x1 - x0) / step));
  for (int i = 0; i <= n; ++i) out.push_back({x0 + i * step, y});
  return out;
}

TEST(NextSubgoal, LookaheadOnStraightPath) {
  Grid g = empty_grid(100, 20);
  DynamicAgent agent;
  agent.pose = {1.0, 1.0, 0.0};
  auto path = straight_path(1.0, 1.0, 8.0, 0.1);
  Vec2 sg = next_subgoal(agent, path, g, 2.0);
  EXPECT_NEAR(sg.x, 3.0, 1e-9);
  EXPECT_NEAR(sg.y, 1.0, 1e-9);
}

TEST(NextSubgoal, AtPathEndReturnsEnd) {
  Grid g = empty_grid(100, 20);
  DynamicAgent agent;
  agent.pose = {8.0, 1.0, 0.0};
  auto path = straight_path(1.0, 1.0, 8.0, 0.1);
  Vec2 sg = next_subgoal(agent, path, g, 2.0);
  EXPECT_NEAR(sg.x, 8.0, 1e-9);
  EXPECT_NEAR(sg.y, 1.0, 1e-9);
}

// Independent Bresenham visibility oracle.
bool bresenham_free(const Grid& g, GridCell a, GridCell b) {
  int x0 = a.x, y0 = a.y, x1 = b.x, y1 = b.y;
  int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (g.occupied(x0, y0)) return false;
    if (x0 == x1 && y0 == y1) return true;
    int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

TEST(NextSubgoal, VisibilityPerBresenhamOracle) {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    Grid g(40, 40, 0.1);
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 40; ++x)
        if (rng.uniform() < 0.2) g.set(x, y, 1);
    g.finalize();
    GridCell start{rng.uniform_int(1, 38), rng.uniform_int(1, 38)};
    GridCell goal{rng.uniform_int(1, 38), rng.uniform_int(1, 38)};
    if (g.occupied(start.x, start.y) || g.occupied(goal.x, goal.y)) continue;
    GridPath gp;
    try {
      gp = astar_plan(g, start, goal);
    } catch (const PathNotFound&) {
      continue;
    }
    std::vector<Vec2> path;
    for (const auto& c : gp.cells) path.push_back(cell_center(g, c));
    DynamicAgent agent;
    agent.pose = {path.front().x, path.front().y, 0.0};
    Vec2 sg = next_subgoal(agent, path, g, 2.0);
    EXPECT_TRUE(bresenham_free(g, cell_of(g, agent.pose.position()), cell_of(g, sg)));
  }
}

TEST(DynamicAgentStep, StraightAheadNoObstacles) {
  World world = make_empty_world(10.0, 10.0);
  DynamicAgent agent;
  agent.pose = {2.0, 5.0, 0.0};
  agent.speed_pref = 0.8;
  Vec2 v = dynamic_agent_step(agent, world, {5.0, 5.0}, 0.1);
  EXPECT_NEAR(v.x, 0.8, 1e-12);
  EXPECT_NEAR(v.y, 0.0, 1e-12);
}

TEST(DynamicAgentStep, SymmetricRepulsionsCancel) {
  World world = make_empty_world(10.0, 10.0);
  world.static_circles.push_back({{3.0, 5.8}, 0.2});
  world.static_circles.push_back({{3.0, 4.2}, 0.2});
  DynamicAgent agent;
  agent.pose = {2.0, 5.0, 0.0};
  agent.speed_pref = 1.0;
  Vec2 v = dynamic_agent_step(agent, world, {6.0, 5.0}, 0.1);
  EXPECT_NEAR(v.y, 0.0, 1e-9);
  EXPECT_GT(v.x, 0.0);
}

TEST(DynamicAgentStep, SpeedNeverExceedsPreference) {
  Rng rng(31);
  World world = make_empty_world(10.0, 10.0);
  for (int i = 0; i < 5; ++i)
    world.static_circles.push_back(
        {{rng.uniform(1.0, 9.0), rng.uniform(1.0, 9.0)}, rng.uniform(0.2, 0.5)});
  for (int k = 0; k < 500; ++k) {
    DynamicAgent agent;
    agent.pose = {rng.uniform(0.5, 9.5), rng.uniform(0.5, 9.5), 0.0};
    agent.speed_pref = rng.uniform(0.2, 1.0);
    Vec2 v = dynamic_agent_step(agent, world, {rng.uniform(0.5, 9.5), rng.uniform(0.5, 9.5)},
                                0.1);
    EXPECT_LE(v.norm(), agent.speed_pref + 1e-9);
  }
}

World crowded_world(int n_agents, std::uint64_t seed) {
  World world = make_empty_world(10.0, 10.0);
  Grid g(*world.grid);
  g.fill_rect(0.0, 0.0, 10.0, 0.2, 1);
  g.fill_rect(0.0, 9.8, 10.0, 10.0, 1);
  g.fill_rect(0.0, 0.0, 0.2, 10.0, 1);
  g.fill_rect(9.8, 0.0, 10.0, 10.0, 1);
  g.finalize();
  world.grid = std::make_shared<Grid>(std::move(g));
  world.plan_grid = std::make_shared<Grid>(world.grid->inflate(0.35));
  world.robot.pose = {5.0, 5.0, 0.0};
  world.robot.radius = 0.3;
  Rng rng(seed);
  for (int i = 0; i < n_agents; ++i) {
    DynamicAgent a;
    a.pose = {1.5 + (i % 3) * 3.0, 1.5 + (i / 3) * 3.0, 0.0};
    a.radius = 0.3;
    a.speed_pref = rng.uniform(0.4, 1.0);
    a.rng = rng.split(100 + i);
    world.agents.push_back(a);
  }
  return world;
}

// Simulation audit: zero agent-agent overlap events across 1000 crowded steps.
TEST(DynamicAgentStep, NoOverlapAcrossThousandSteps) {
  World world = crowded_world(6, 9001);
  int overlaps = 0;
  for (int t = 0; t < 1000; ++t) {
    world_step_inplace(world, 0.0, 0.0, 0.1);
    for (std::size_t i = 0; i < world.agents.size(); ++i)
      for (std::size_t j = i + 1; j < world.agents.size(); ++j) {
        double d = (world.agents[i].pose.position() - world.agents[j].pose.position()).norm();
        if (d < world.agents[i].radius + world.agents[j].radius) ++overlaps;
      }
  }
  EXPECT_EQ(overlaps, 0);
}

TEST(AgentRollout, SeedReproducible) {
  World a = crowded_world(5, 42);
  World b = crowded_world(5, 42);
  for (int t = 0; t < 200; ++t) {
    world_step_inplace(a, 0.2, 0.1, 0.1);
    world_step_inplace(b, 0.2, 0.1, 0.1);
  }
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    EXPECT_EQ(a.agents[i].pose.x, b.agents[i].pose.x);
    EXPECT_EQ(a.agents[i].pose.y, b.agents[i].pose.y);
    EXPECT_EQ(a.agents[i].rng.state(), b.agents[i].rng.state());
  }
}

}  // namespace
}  // namespace navskills
