#pragma once

#include <cstdint>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "navskills/geometry.hpp"

namespace navskills {

// Occupancy grid with origin at (0,0), cell (cx,cy) covering
// [cx*cell_size,(cx+1)*cell_size] x [cy*cell_size,(cy+1)*cell_size].
// Out-of-bounds cells are treated as free; maps are expected to carry their
// own border walls. finalize() builds a bucket index over obstacle surface
// cells for nearest-distance queries and must be called after the cells are
// edited.
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, double cell_size, std::uint8_t fill = 0)
      : width_(width), height_(height), cell_size_(cell_size),
        cells_(static_cast<std::size_t>(width) * height, fill) {
    if (width <= 0 || height <= 0 || cell_size <= 0.0)
      throw std::invalid_argument("Grid: bad dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }
  double width_m() const { return width_ * cell_size_; }
  double height_m() const { return height_ * cell_size_; }

  bool in_bounds(int cx, int cy) const {
    return cx >= 0 && cy >= 0 && cx < width_ && cy < height_;
  }

  bool occupied(int cx, int cy) const {
    if (!in_bounds(cx, cy)) return false;
    return cells_[static_cast<std::size_t>(cy) * width_ + cx] != 0;
  }

  bool occupied_at(double wx, double wy) const {
    return occupied(static_cast<int>(std::floor(wx / cell_size_)),
                    static_cast<int>(std::floor(wy / cell_size_)));
  }

  void set(int cx, int cy, std::uint8_t v) {
    if (!in_bounds(cx, cy)) return;
    cells_[static_cast<std::size_t>(cy) * width_ + cx] = v;
  }

  void fill_rect_cells(int x0, int y0, int x1, int y1, std::uint8_t v) {
    for (int y = std::max(0, y0); y <= std::min(height_ - 1, y1); ++y)
      for (int x = std::max(0, x0); x <= std::min(width_ - 1, x1); ++x)
        cells_[static_cast<std::size_t>(y) * width_ + x] = v;
  }

  // Rectangle in meters, inclusive of any partially covered cell.
  void fill_rect(double x0, double y0, double x1, double y1, std::uint8_t v) {
    fill_rect_cells(static_cast<int>(std::floor(x0 / cell_size_)),
                    static_cast<int>(std::floor(y0 / cell_size_)),
                    static_cast<int>(std::ceil(x1 / cell_size_)) - 1,
                    static_cast<int>(std::ceil(y1 / cell_size_)) - 1, v);
  }

  void stamp_circle(const Circle& c, std::uint8_t v) {
    int x0 = static_cast<int>(std::floor((c.center.x - c.radius) / cell_size_));
    int x1 = static_cast<int>(std::floor((c.center.x + c.radius) / cell_size_));
    int y0 = static_cast<int>(std::floor((c.center.y - c.radius) / cell_size_));
    int y1 = static_cast<int>(std::floor((c.center.y + c.radius) / cell_size_));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        if (!in_bounds(x, y)) continue;
        double cxm = (x + 0.5) * cell_size_;
        double cym = (y + 0.5) * cell_size_;
        if (std::hypot(cxm - c.center.x, cym - c.center.y) <= c.radius)
          cells_[static_cast<std::size_t>(y) * width_ + x] = v;
      }
  }

  std::size_t count_free() const {
    std::size_t n = 0;
    for (std::uint8_t c : cells_)
      if (c == 0) ++n;
    return n;
  }

  const std::vector<std::uint8_t>& cells() const { return cells_; }

  // Largest free connected component (4-connected), as a fraction of all
  // free cells. 1.0 for a fully connected map; 0 when there is no free cell.
  double largest_free_component_fraction() const {
    std::size_t total_free = count_free();
    if (total_free == 0) return 0.0;
    std::vector<std::uint8_t> seen(cells_.size(), 0);
    std::vector<int> stack;
    std::size_t best = 0;
    for (int start = 0; start < static_cast<int>(cells_.size()); ++start) {
      if (cells_[start] != 0 || seen[start]) continue;
      std::size_t comp = 0;
      stack.push_back(start);
      seen[start] = 1;
      while (!stack.empty()) {
        int idx = stack.back();
        stack.pop_back();
        ++comp;
        int cx = idx % width_, cy = idx / width_;
        const int nx[4] = {cx - 1, cx + 1, cx, cx};
        const int ny[4] = {cy, cy, cy - 1, cy + 1};
        for (int k = 0; k < 4; ++k) {
          if (!in_bounds(nx[k], ny[k])) continue;
          int nidx = ny[k] * width_ + nx[k];
          if (cells_[nidx] == 0 && !seen[nidx]) {
            seen[nidx] = 1;
            stack.push_back(nidx);
          }
        }
      }
      best = std::max(best, comp);
    }
    return static_cast<double>(best) / static_cast<double>(total_free);
  }

  // Occupied cells dilated by the given radius (meters). Used to build
  // planning grids where a disc-shaped body is reduced to a point.
  Grid inflate(double radius) const {
    Grid out(width_, height_, cell_size_);
    int r = static_cast<int>(std::ceil(radius / cell_size_));
    double r2 = radius / cell_size_;
    for (int cy = 0; cy < height_; ++cy)
      for (int cx = 0; cx < width_; ++cx) {
        if (!occupied(cx, cy)) continue;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            if (std::hypot(static_cast<double>(dx), static_cast<double>(dy)) > r2)
              continue;
            out.set(cx + dx, cy + dy, 1);
          }
      }
    out.finalize();
    return out;
  }

  // True when the disc at (px,py) with radius r touches an occupied cell.
  bool disc_hits(double px, double py, double r) const {
    int x0 = static_cast<int>(std::floor((px - r) / cell_size_));
    int x1 = static_cast<int>(std::floor((px + r) / cell_size_));
    int y0 = static_cast<int>(std::floor((py - r) / cell_size_));
    int y1 = static_cast<int>(std::floor((py + r) / cell_size_));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        if (!occupied(x, y)) continue;
        if (cell_distance(px, py, x, y) <= r) return true;
      }
    return false;
  }

  double cell_distance(double px, double py, int cx, int cy) const {
    return point_rect_distance(px, py, cx * cell_size_, cy * cell_size_,
                               (cx + 1) * cell_size_, (cy + 1) * cell_size_);
  }

  void finalize() {
    surface_.clear();
    for (int cy = 0; cy < height_; ++cy)
      for (int cx = 0; cx < width_; ++cx) {
        if (!occupied(cx, cy)) continue;
        bool exposed = false;
        for (int dy = -1; dy <= 1 && !exposed; ++dy)
          for (int dx = -1; dx <= 1 && !exposed; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (!occupied(cx + dx, cy + dy)) exposed = true;
          }
        if (exposed) surface_.push_back(cy * width_ + cx);
      }
    bucket_cells_ = 8;
    bw_ = (width_ + bucket_cells_ - 1) / bucket_cells_;
    bh_ = (height_ + bucket_cells_ - 1) / bucket_cells_;
    buckets_.assign(static_cast<std::size_t>(bw_) * bh_, {});
    for (int idx : surface_) {
      int cx = idx % width_, cy = idx / width_;
      buckets_[static_cast<std::size_t>(cy / bucket_cells_) * bw_ + cx / bucket_cells_]
          .push_back(idx);
    }
    finalized_ = true;
  }

  bool finalized() const { return finalized_; }

  // Distance from a point to the nearest occupied-cell surface, capped.
  // Returns 0 when the point lies inside an occupied cell, cap when no
  // obstacle is within cap.
  double nearest_obstacle_distance(double px, double py, double cap) const {
    if (occupied_at(px, py)) return 0.0;
    if (!finalized_) throw std::logic_error("Grid: finalize() before distance queries");
    if (surface_.empty()) return cap;
    double bucket_m = bucket_cells_ * cell_size_;
    int bx = static_cast<int>(std::floor(px / (bucket_m)));
    int by = static_cast<int>(std::floor(py / (bucket_m)));
    double best = cap;
    int max_ring = static_cast<int>(std::ceil(cap / bucket_m)) + 2;
    for (int ring = 0; ring <= max_ring; ++ring) {
      double lower = (ring - 1) * bucket_m;
      if (lower > best) break;
      for (int gy = by - ring; gy <= by + ring; ++gy) {
        for (int gx = bx - ring; gx <= bx + ring; ++gx) {
          if (std::max(std::abs(gx - bx), std::abs(gy - by)) != ring) continue;
          if (gx < 0 || gy < 0 || gx >= bw_ || gy >= bh_) continue;
          for (int idx : buckets_[static_cast<std::size_t>(gy) * bw_ + gx]) {
            double d = cell_distance(px, py, idx % width_, idx / width_);
            if (d < best) best = d;
          }
        }
      }
    }
    return best;
  }

  // Run-length encoding, row-major: "count:value" pairs separated by commas.
  std::string rle_encode() const {
    std::ostringstream os;
    std::size_t i = 0;
    bool first = true;
    while (i < cells_.size()) {
      std::uint8_t v = cells_[i];
      std::size_t j = i;
      while (j < cells_.size() && cells_[j] == v) ++j;
      if (!first) os << ',';
      os << (j - i) << ':' << static_cast<int>(v);
      first = false;
      i = j;
    }
    return os.str();
  }

  static Grid rle_decode(int width, int height, double cell_size,
                         const std::string& rle) {
    Grid g(width, height, cell_size);
    std::size_t pos = 0, out = 0;
    while (pos < rle.size()) {
      std::size_t colon = rle.find(':', pos);
      if (colon == std::string::npos) throw std::runtime_error("Grid: bad RLE");
      std::size_t comma = rle.find(',', colon);
      if (comma == std::string::npos) comma = rle.size();
      std::size_t count = std::stoull(rle.substr(pos, colon - pos));
      int value = std::stoi(rle.substr(colon + 1, comma - colon - 1));
      if (out + count > g.cells_.size()) throw std::runtime_error("Grid: RLE overflow");
      for (std::size_t k = 0; k < count; ++k) g.cells_[out++] = static_cast<std::uint8_t>(value);
      pos = comma + (comma < rle.size() ? 1 : 0);
    }
    if (out != g.cells_.size()) throw std::runtime_error("Grid: RLE underflow");
    g.finalize();
    return g;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  double cell_size_ = 0.1;
  std::vector<std::uint8_t> cells_;

  // surface index
  bool finalized_ = false;
  int bucket_cells_ = 8;
  int bw_ = 0, bh_ = 0;
  std::vector<int> surface_;
  std::vector<std::vector<int>> buckets_;
};

using GridPtr = std::shared_ptr<const Grid>;

}  // namespace navskills
