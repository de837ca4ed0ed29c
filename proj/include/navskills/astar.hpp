#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "navskills/grid.hpp"

namespace navskills {

struct GridCell {
  int x = 0;
  int y = 0;
  bool operator==(const GridCell& o) const { return x == o.x && y == o.y; }
};

struct GridPath {
  std::vector<GridCell> cells;  // start..goal, consecutive cells 8-adjacent
  double length = 0.0;          // meters
};

struct PathNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline double octile(int dx, int dy) {
  dx = std::abs(dx);
  dy = std::abs(dy);
  return (dx > dy) ? dx + 0.41421356237309515 * dy : dy + 0.41421356237309515 * dx;
}

}  // namespace detail

// Cost-optimal 8-connected path, octile heuristic, unit straight / sqrt(2)
// diagonal step costs (cells). Diagonal moves through a blocked orthogonal
// neighbor are disallowed. Ties broken by (f, h, cell index) so the result is
// deterministic.
inline GridPath astar_plan(const Grid& grid, GridCell start, GridCell goal) {
  if (!grid.in_bounds(start.x, start.y) || grid.occupied(start.x, start.y))
    throw PathNotFound("astar_plan: start cell blocked or out of bounds");
  if (!grid.in_bounds(goal.x, goal.y) || grid.occupied(goal.x, goal.y))
    throw PathNotFound("astar_plan: goal cell blocked or out of bounds");

  const int w = grid.width(), h = grid.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> g_cost(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);

  struct QEntry {
    double f, hcost;
    int idx;
    bool operator>(const QEntry& o) const {
      if (f != o.f) return f > o.f;
      if (hcost != o.hcost) return hcost > o.hcost;
      return idx > o.idx;
    }
  };
  std::priority_queue<QEntry, std::vector<QEntry>, std::greater<QEntry>> open;

  auto idx_of = [w](int x, int y) { return y * w + x; };
  int start_idx = idx_of(start.x, start.y);
  int goal_idx = idx_of(goal.x, goal.y);
  g_cost[start_idx] = 0.0;
  open.push({detail::octile(goal.x - start.x, goal.y - start.y),
             detail::octile(goal.x - start.x, goal.y - start.y), start_idx});

  static const int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static const int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  static const double cost8[8] = {1, 1, 1, 1, 1.4142135623730951, 1.4142135623730951,
                                  1.4142135623730951, 1.4142135623730951};

  while (!open.empty()) {
    QEntry e = open.top();
    open.pop();
    if (closed[e.idx]) continue;
    closed[e.idx] = 1;
    if (e.idx == goal_idx) break;
    int cx = e.idx % w, cy = e.idx / w;
    for (int k = 0; k < 8; ++k) {
      int nx = cx + dx8[k], ny = cy + dy8[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      if (grid.occupied(nx, ny)) continue;
      if (k >= 4 && (grid.occupied(cx + dx8[k], cy) || grid.occupied(cx, cy + dy8[k])))
        continue;  // no corner cutting
      int nidx = idx_of(nx, ny);
      if (closed[nidx]) continue;
      double tentative = g_cost[e.idx] + cost8[k];
      if (tentative < g_cost[nidx]) {
        g_cost[nidx] = tentative;
        parent[nidx] = e.idx;
        double hc = detail::octile(goal.x - nx, goal.y - ny);
        open.push({tentative + hc, hc, nidx});
      }
    }
  }

  if (!closed[goal_idx]) throw PathNotFound("astar_plan: goal unreachable");

  GridPath path;
  for (int at = goal_idx; at != -1; at = parent[at])
    path.cells.push_back({at % w, at / w});
  std::reverse(path.cells.begin(), path.cells.end());
  path.length = g_cost[goal_idx] * grid.cell_size();
  return path;
}

// Uniform-cost search over the same graph; test oracle for astar_plan and the
// cheap reachability predicate used by scenario sampling.
inline bool grid_reachable(const Grid& grid, GridCell start, GridCell goal) {
  if (!grid.in_bounds(start.x, start.y) || grid.occupied(start.x, start.y)) return false;
  if (!grid.in_bounds(goal.x, goal.y) || grid.occupied(goal.x, goal.y)) return false;
  const int w = grid.width(), h = grid.height();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
  std::vector<int> stack{start.y * w + start.x};
  seen[stack[0]] = 1;
  int goal_idx = goal.y * w + goal.x;
  while (!stack.empty()) {
    int idx = stack.back();
    stack.pop_back();
    if (idx == goal_idx) return true;
    int cx = idx % w, cy = idx / w;
    const int dx4[4] = {1, -1, 0, 0};
    const int dy4[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      int nx = cx + dx4[k], ny = cy + dy4[k];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      int nidx = ny * w + nx;
      if (!grid.occupied(nx, ny) && !seen[nidx]) {
        seen[nidx] = 1;
        stack.push_back(nidx);
      }
    }
  }
  return false;
}

// Bresenham visibility between two cells: every cell on the discrete line
// must be free.
inline bool grid_line_of_sight(const Grid& grid, GridCell a, GridCell b) {
  int x0 = a.x, y0 = a.y, x1 = b.x, y1 = b.y;
  int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (grid.occupied(x0, y0)) return false;
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

inline GridCell cell_of(const Grid& grid, const Vec2& p) {
  return {static_cast<int>(std::floor(p.x / grid.cell_size())),
          static_cast<int>(std::floor(p.y / grid.cell_size()))};
}

inline Vec2 cell_center(const Grid& grid, GridCell c) {
  return {(c.x + 0.5) * grid.cell_size(), (c.y + 0.5) * grid.cell_size()};
}

}  // namespace navskills
