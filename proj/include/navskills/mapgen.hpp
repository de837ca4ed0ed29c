#pragma once

#include <optional>
#include <string>

#include "navskills/agents.hpp"
#include "navskills/astar.hpp"
#include "navskills/world.hpp"

namespace navskills {

struct MapSpec {
  enum class Kind { indoor, outdoor };
  Kind kind = Kind::indoor;
  double width = 50.0;   // meters; outdoor default is 20x20
  double height = 50.0;
  int n_static = 0;
  int n_dynamic = 0;
  int n_corridors = 0;
  double corridor_width = 1.5;
  double cell_size = 0.1;
  std::uint64_t seed = 0;
};

inline MapSpec default_outdoor_spec() {
  MapSpec s;
  s.kind = MapSpec::Kind::outdoor;
  s.width = 20.0;
  s.height = 20.0;
  return s;
}

struct Scenario {
  World world;  // robot placed at start, goal set, agents seeded
  Pose start;
  Vec2 goal;
  double min_start_goal_sep = 0.0;
};

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioOptions {
  double robot_radius = 0.3;
  double min_start_goal_sep = 5.0;
  double agent_radius = 0.3;
  double agent_speed_lo = 0.3;
  double agent_speed_hi = 1.0;
  double start_clearance = 0.1;  // beyond the robot radius
};

namespace detail {

inline constexpr double kWallThickness = 0.2;  // meters

inline void draw_border(Grid& g) {
  int t = std::max(1, static_cast<int>(std::lround(kWallThickness / g.cell_size())));
  g.fill_rect_cells(0, 0, g.width() - 1, t - 1, 1);
  g.fill_rect_cells(0, g.height() - t, g.width() - 1, g.height() - 1, 1);
  g.fill_rect_cells(0, 0, t - 1, g.height() - 1, 1);
  g.fill_rect_cells(g.width() - t, 0, g.width() - 1, g.height() - 1, 1);
}

struct Region {
  int x0, y0, x1, y1;  // free interior cells, inclusive
  int w() const { return x1 - x0 + 1; }
  int h() const { return y1 - y0 + 1; }
};

// Split a region with a wall carrying one corridor gap. Returns false when
// the region is too small to split.
inline bool split_region(Grid& g, Region r, int wall_cells, int gap_cells,
                         Rng& rng, Region& a, Region& b) {
  int min_side = gap_cells + 2;  // keep child regions passable
  bool vertical = r.w() >= r.h();
  if (vertical) {
    if (r.w() < 2 * min_side + wall_cells) return false;
    int wx = rng.uniform_int(r.x0 + min_side, r.x1 - min_side - wall_cells + 1);
    int gy = rng.uniform_int(r.y0, r.y1 - gap_cells + 1);
    g.fill_rect_cells(wx, r.y0, wx + wall_cells - 1, r.y1, 1);
    g.fill_rect_cells(wx, gy, wx + wall_cells - 1, gy + gap_cells - 1, 0);
    a = {r.x0, r.y0, wx - 1, r.y1};
    b = {wx + wall_cells, r.y0, r.x1, r.y1};
  } else {
    if (r.h() < 2 * min_side + wall_cells) return false;
    int wy = rng.uniform_int(r.y0 + min_side, r.y1 - min_side - wall_cells + 1);
    int gx = rng.uniform_int(r.x0, r.x1 - gap_cells + 1);
    g.fill_rect_cells(r.x0, wy, r.x1, wy + wall_cells - 1, 1);
    g.fill_rect_cells(gx, wy, gx + gap_cells - 1, wy + wall_cells - 1, 0);
    a = {r.x0, r.y0, r.x1, wy - 1};
    b = {r.x0, wy + wall_cells, r.x1, r.y1};
  }
  return true;
}

// Scatter circle obstacles into free grid space with mutual surface
// clearance. Placement draws are a prefix-stable function of the rng, so a
// spec that only raises n_static reuses the earlier placements.
inline void scatter_circles(World& world, int count, double clearance, Rng& rng,
                            std::vector<Circle>& out) {
  const Grid& g = *world.grid;
  for (int i = 0; i < count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 400 && !placed; ++attempt) {
      double radius = rng.uniform(0.2, 0.5);
      Vec2 c{rng.uniform(radius + kWallThickness, g.width_m() - radius - kWallThickness),
             rng.uniform(radius + kWallThickness, g.height_m() - radius - kWallThickness)};
      if (g.nearest_obstacle_distance(c.x, c.y, radius + clearance + 1.0) < radius + clearance)
        continue;
      bool clash = false;
      for (const auto& o : out)
        if ((c - o.center).norm() < radius + o.radius + clearance) {
          clash = true;
          break;
        }
      if (clash) continue;
      out.push_back({c, radius});
      placed = true;
    }
    if (!placed)
      throw GenerationError("scatter_circles: could not place obstacle " + std::to_string(i));
  }
}

}  // namespace detail

// Bordered map partitioned into rooms by n_corridors walls, each pierced by
// one corridor_width gap. Every split keeps the two halves connected, so the
// free space stays one component.
inline World generate_indoor_map(const MapSpec& spec) {
  if (spec.kind != MapSpec::Kind::indoor)
    throw GenerationError("generate_indoor_map: spec.kind must be indoor");
  if (spec.corridor_width <= 0.0 || spec.cell_size <= 0.0 || spec.n_corridors < 0 ||
      spec.n_static < 0)
    throw GenerationError("generate_indoor_map: bad spec");
  Rng rng(spec.seed);
  auto grid = std::make_shared<Grid>(static_cast<int>(std::lround(spec.width / spec.cell_size)),
                                     static_cast<int>(std::lround(spec.height / spec.cell_size)),
                                     spec.cell_size);
  detail::draw_border(*grid);
  int border = std::max(1, static_cast<int>(std::lround(detail::kWallThickness / spec.cell_size)));
  int wall_cells = border;
  int gap_cells = std::max(1, static_cast<int>(std::lround(spec.corridor_width / spec.cell_size)));

  std::vector<detail::Region> regions{{border, border, grid->width() - border - 1,
                                       grid->height() - border - 1}};
  int splits_done = 0;
  std::size_t next = 0;
  while (splits_done < spec.n_corridors) {
    if (next >= regions.size())
      throw GenerationError("generate_indoor_map: corridors do not fit");
    detail::Region a{}, b{};
    if (detail::split_region(*grid, regions[next], wall_cells, gap_cells, rng, a, b)) {
      regions.push_back(a);
      regions.push_back(b);
      ++splits_done;
    }
    ++next;
  }
  grid->finalize();

  World world;
  world.grid = grid;
  detail::scatter_circles(world, spec.n_static, 2.0 * 0.3, rng, world.static_circles);
  return world;
}

// Open bordered field with scattered circles and rectangular blocks,
// pairwise surface clearance >= 2 * robot radius.
inline World generate_outdoor_map(const MapSpec& spec, double robot_radius = 0.3) {
  if (spec.kind != MapSpec::Kind::outdoor)
    throw GenerationError("generate_outdoor_map: spec.kind must be outdoor");
  if (spec.n_static < 0 || spec.cell_size <= 0.0)
    throw GenerationError("generate_outdoor_map: bad spec");
  Rng rng(spec.seed);
  auto grid = std::make_shared<Grid>(static_cast<int>(std::lround(spec.width / spec.cell_size)),
                                     static_cast<int>(std::lround(spec.height / spec.cell_size)),
                                     spec.cell_size);
  detail::draw_border(*grid);

  World world;
  double clearance = 2.0 * robot_radius;
  std::vector<Circle> circles;
  std::vector<std::array<double, 4>> rects;  // x0,y0,x1,y1
  for (int i = 0; i < spec.n_static; ++i) {
    bool make_rect = rng.uniform() < 0.4;
    bool placed = false;
    for (int attempt = 0; attempt < 400 && !placed; ++attempt) {
      double margin = detail::kWallThickness + clearance;
      if (make_rect) {
        double rw = rng.uniform(0.4, 1.2), rh = rng.uniform(0.4, 1.2);
        double x0 = rng.uniform(margin, spec.width - margin - rw);
        double y0 = rng.uniform(margin, spec.height - margin - rh);
        // snap to cell boundaries so the rasterized footprint is exact
        auto snap = [&](double v) { return std::round(v / spec.cell_size) * spec.cell_size; };
        double x1 = std::max(snap(x0 + rw), snap(x0) + spec.cell_size);
        double y1 = std::max(snap(y0 + rh), snap(y0) + spec.cell_size);
        std::array<double, 4> rect{snap(x0), snap(y0), x1, y1};
        bool clash = false;
        for (const auto& c : circles)
          if (point_rect_distance(c.center.x, c.center.y, rect[0], rect[1], rect[2], rect[3]) <
              c.radius + clearance) {
            clash = true;
            break;
          }
        for (const auto& o : rects) {
          double dx = std::max({o[0] - rect[2], 0.0, rect[0] - o[2]});
          double dy = std::max({o[1] - rect[3], 0.0, rect[1] - o[3]});
          if (std::hypot(dx, dy) < clearance) {
            clash = true;
            break;
          }
        }
        if (clash) continue;
        rects.push_back(rect);
      } else {
        double radius = rng.uniform(0.2, 0.5);
        Vec2 c{rng.uniform(margin + radius, spec.width - margin - radius),
               rng.uniform(margin + radius, spec.height - margin - radius)};
        bool clash = false;
        for (const auto& o : circles)
          if ((c - o.center).norm() < radius + o.radius + clearance) {
            clash = true;
            break;
          }
        for (const auto& o : rects)
          if (point_rect_distance(c.x, c.y, o[0], o[1], o[2], o[3]) < radius + clearance) {
            clash = true;
            break;
          }
        if (clash) continue;
        circles.push_back({c, radius});
      }
      placed = true;
    }
    if (!placed)
      throw GenerationError("generate_outdoor_map: could not place obstacle " + std::to_string(i));
  }
  auto g = std::make_shared<Grid>(*grid);
  for (const auto& r : rects) g->fill_rect(r[0], r[1], r[2], r[3], 1);
  g->finalize();
  world.grid = g;
  world.static_circles = std::move(circles);
  return world;
}

// Planning grid: walls plus rasterized static circles, inflated by the body
// radius so planning can treat the body as a point.
inline GridPtr build_plan_grid(const World& world, double body_radius) {
  Grid stamped(*world.grid);
  for (const auto& c : world.static_circles) stamped.stamp_circle(c, 1);
  return std::make_shared<Grid>(stamped.inflate(body_radius + 0.05));
}

// Collision-free start pose and goal with clearance, minimum separation, and
// grid reachability between them.
inline std::pair<Pose, Vec2> sample_start_goal(const World& world, Rng& rng, double min_sep,
                                               double robot_radius = 0.3,
                                               double clearance = 0.1) {
  const Grid& g = *world.grid;
  GridPtr plan = world.plan_grid ? world.plan_grid : build_plan_grid(world, robot_radius);
  auto sample_free = [&](Vec2& out) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      Vec2 p{rng.uniform(0.0, g.width_m()), rng.uniform(0.0, g.height_m())};
      World probe = world;
      probe.robot.radius = robot_radius;
      if (min_obstacle_distance(probe, Pose{p.x, p.y, 0.0}, clearance + 1.0) < clearance)
        continue;
      if (plan->occupied_at(p.x, p.y)) continue;  // keep samples plannable
      out = p;
      return true;
    }
    return false;
  };
  for (int attempt = 0; attempt < 200; ++attempt) {
    Vec2 s, t;
    if (!sample_free(s) || !sample_free(t)) break;
    if ((s - t).norm() < min_sep) continue;
    if (!grid_reachable(*plan, cell_of(*plan, s), cell_of(*plan, t))) continue;
    double theta = rng.uniform(-kPi, kPi);
    return {Pose{s.x, s.y, theta}, t};
  }
  throw ScenarioError("sample_start_goal: no valid start/goal pair found");
}

// Compose map generation, agent seeding, and start/goal sampling. The map
// itself is a function of spec.seed; placements follow placement_seed so an
// evaluation can vary episodes over a fixed map.
inline Scenario build_scenario(const MapSpec& spec, const ScenarioOptions& opts = {},
                               std::optional<std::uint64_t> placement_seed = std::nullopt) {
  World world = spec.kind == MapSpec::Kind::indoor ? generate_indoor_map(spec)
                                                   : generate_outdoor_map(spec, opts.robot_radius);
  Rng rng = Rng(placement_seed.value_or(spec.seed)).split(0x5eed);
  world.plan_grid = build_plan_grid(world, std::max(opts.robot_radius, opts.agent_radius));
  world.robot.radius = opts.robot_radius;

  Scenario sc;
  auto [start, goal] = sample_start_goal(world, rng, opts.min_start_goal_sep, opts.robot_radius,
                                         opts.start_clearance);
  world.robot.pose = start;
  world.goal = goal;

  for (int i = 0; i < spec.n_dynamic; ++i) {
    DynamicAgent agent;
    agent.radius = opts.agent_radius;
    agent.speed_pref = rng.uniform(opts.agent_speed_lo, opts.agent_speed_hi);
    agent.rng = rng.split(1000 + i);
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      Vec2 p{rng.uniform(0.0, world.grid->width_m()), rng.uniform(0.0, world.grid->height_m())};
      if (world.plan_grid->occupied_at(p.x, p.y)) continue;
      if ((p - start.position()).norm() < 1.5 || (p - goal).norm() < 1.0) continue;
      bool clash = false;
      for (const auto& other : world.agents)
        if ((p - other.pose.position()).norm() < agent.radius + other.radius + 0.2) {
          clash = true;
          break;
        }
      if (clash) continue;
      agent.pose = Pose{p.x, p.y, rng.uniform(-kPi, kPi)};
      placed = true;
    }
    if (!placed) throw ScenarioError("build_scenario: could not place dynamic agent");
    world.agents.push_back(std::move(agent));
  }

  sc.world = std::move(world);
  sc.start = start;
  sc.goal = goal;
  sc.min_start_goal_sep = opts.min_start_goal_sep;
  return sc;
}

// Seed-pinned evaluation scenarios: a long corridor with 4 walkers, a
// room-and-corridor building with 9, and an open mall floor with 8.
inline MapSpec named_map_spec(const std::string& name) {
  MapSpec spec;
  if (name == "corridor") {
    spec.kind = MapSpec::Kind::indoor;
    spec.width = 20.0;
    spec.height = 5.0;
    spec.n_corridors = 0;
    spec.n_static = 2;
    spec.n_dynamic = 4;
    spec.seed = 0xc0441d04;
  } else if (name == "building") {
    spec.kind = MapSpec::Kind::indoor;
    spec.width = 30.0;
    spec.height = 30.0;
    spec.n_corridors = 5;
    spec.n_static = 6;
    spec.n_dynamic = 9;
    spec.seed = 0xb111d164;
  } else if (name == "mall") {
    spec.kind = MapSpec::Kind::outdoor;
    spec.width = 25.0;
    spec.height = 25.0;
    spec.n_static = 12;
    spec.n_dynamic = 8;
    spec.seed = 0x3a110423;
  } else {
    throw ScenarioError("named_map_spec: unknown scenario " + name);
  }
  return spec;
}

inline ScenarioOptions named_scenario_options(const std::string& name) {
  ScenarioOptions opts;
  opts.min_start_goal_sep = name == "corridor" ? 12.0 : 10.0;
  return opts;
}

inline Scenario build_named_scenario(const std::string& name, std::uint64_t episode_seed) {
  MapSpec spec = named_map_spec(name);
  return build_scenario(spec, named_scenario_options(name),
                        mix64(spec.seed) ^ mix64(episode_seed + 1));
}

}  // namespace navskills
