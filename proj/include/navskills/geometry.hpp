#pragma once

#include <algorithm>
#include <cmath>

namespace navskills {

inline constexpr double kPi = 3.14159265358979323846;

// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
  double t = std::fmod(a + kPi, 2.0 * kPi);
  if (t <= 0.0) t += 2.0 * kPi;
  return t - kPi;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  double norm_sq() const { return x * x + y * y; }
};

inline Vec2 unit_or_zero(const Vec2& v) {
  double n = v.norm();
  if (n < 1e-12) return {0.0, 0.0};
  return {v.x / n, v.y / n};
}

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // (-pi, pi]

  Vec2 position() const { return {x, y}; }
};

struct Circle {
  Vec2 center;
  double radius = 0.0;
};

// Distance from a point to an axis-aligned rectangle [x0,x1]x[y0,y1].
// Zero when the point is inside.
inline double point_rect_distance(double px, double py, double x0, double y0,
                                  double x1, double y1) {
  double dx = std::max({x0 - px, 0.0, px - x1});
  double dy = std::max({y0 - py, 0.0, py - y1});
  return std::hypot(dx, dy);
}

// Smallest positive ray parameter where o + t*d hits the circle, or a
// negative value when it misses. Assumes |d| = 1.
inline double ray_circle_hit(const Vec2& o, const Vec2& d, const Circle& c) {
  Vec2 oc = o - c.center;
  double b = oc.dot(d);
  double q = oc.norm_sq() - c.radius * c.radius;
  double disc = b * b - q;
  if (disc < 0.0) return -1.0;
  double s = std::sqrt(disc);
  double t = -b - s;
  if (t >= 0.0) return t;
  t = -b + s;  // origin inside the circle
  return t >= 0.0 ? t : -1.0;
}

}  // namespace navskills
