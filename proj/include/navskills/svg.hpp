#pragma once

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "navskills/world.hpp"

namespace navskills {

// All rendering is plain string building with fixed-precision numbers, so a
// given input always produces byte-identical SVG.
namespace svg {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", x);
  return buf;
}

inline constexpr std::array<const char*, 5> kSkillColors = {
    "#d62728", "#2ca02c", "#1f77b4", "#9467bd", "#ff7f0e"};
inline constexpr std::array<const char*, 5> kSkillLabels = {"collision", "progress", "speed",
                                                            "smooth", "safety"};

struct MapStyle {
  double px_per_m = 20.0;
  double margin = 10.0;  // pixels
};

namespace detail {

// World y points up, SVG y points down.
inline double flip_y(double y, double height_m, const MapStyle& st) {
  return st.margin + (height_m - y) * st.px_per_m;
}

inline double to_x(double x, const MapStyle& st) { return st.margin + x * st.px_per_m; }

inline void append_grid(std::string& out, const Grid& g, double height_m, const MapStyle& st,
                        const char* fill) {
  // Merge horizontal runs of occupied cells into single rects.
  for (int cy = 0; cy < g.height(); ++cy) {
    int cx = 0;
    while (cx < g.width()) {
      if (!g.occupied(cx, cy)) {
        ++cx;
        continue;
      }
      int x0 = cx;
      while (cx < g.width() && g.occupied(cx, cy)) ++cx;
      double wx = x0 * g.cell_size();
      double wy = (cy + 1) * g.cell_size();
      out += "<rect x=\"" + num(to_x(wx, st)) + "\" y=\"" + num(flip_y(wy, height_m, st)) +
             "\" width=\"" + num((cx - x0) * g.cell_size() * st.px_per_m) + "\" height=\"" +
             num(g.cell_size() * st.px_per_m) + "\" fill=\"" + fill + "\"/>\n";
    }
  }
}

inline void append_circle(std::string& out, const Vec2& c, double r, double height_m,
                          const MapStyle& st, const std::string& attrs) {
  out += "<circle cx=\"" + num(to_x(c.x, st)) + "\" cy=\"" + num(flip_y(c.y, height_m, st)) +
         "\" r=\"" + num(r * st.px_per_m) + "\" " + attrs + "/>\n";
}

}  // namespace detail

// Static map thumbnail: walls, static circles, dynamic agents, robot and goal.
inline std::string map_svg(const World& w, const MapStyle& st = {}) {
  double wm = w.grid ? w.grid->width_m() : 10.0;
  double hm = w.grid ? w.grid->height_m() : 10.0;
  double width_px = 2 * st.margin + wm * st.px_per_m;
  double height_px = 2 * st.margin + hm * st.px_per_m;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_px) +
                    "\" height=\"" + num(height_px) + "\" viewBox=\"0 0 " + num(width_px) + " " +
                    num(height_px) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(width_px) + "\" height=\"" + num(height_px) +
         "\" fill=\"#ffffff\"/>\n";
  if (w.grid) detail::append_grid(out, *w.grid, hm, st, "#444444");
  for (const auto& c : w.static_circles)
    detail::append_circle(out, c.center, c.radius, hm, st, "fill=\"#777777\"");
  for (const auto& a : w.agents)
    detail::append_circle(out, a.pose.position(), a.radius, hm, st,
                          "fill=\"#e8a33d\" stroke=\"#9c6b1e\"");
  detail::append_circle(out, w.robot.pose.position(), w.robot.radius, hm, st,
                        "fill=\"#3d7be8\" stroke=\"#1e4a9c\"");
  detail::append_circle(out, w.goal, 0.15, hm, st,
                        "fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"2\"");
  out += "</svg>\n";
  return out;
}

// Trajectory over the map plus an optional per-step skill strip underneath.
// The strip has one column per episode step and one row per skill component,
// column opacity proportional to the component value over w_max.
inline std::string trajectory_svg(const World& w, const std::vector<Pose>& traj,
                                  const std::vector<std::array<double, 5>>* skills = nullptr,
                                  double w_max = 0.2, const MapStyle& st = {}) {
  double wm = w.grid ? w.grid->width_m() : 10.0;
  double hm = w.grid ? w.grid->height_m() : 10.0;
  double width_px = 2 * st.margin + wm * st.px_per_m;
  double map_px = 2 * st.margin + hm * st.px_per_m;
  double row_px = 10.0;
  double strip_px = skills != nullptr ? 5 * row_px + st.margin + 14.0 : 0.0;
  double height_px = map_px + strip_px;

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_px) +
                    "\" height=\"" + num(height_px) + "\" viewBox=\"0 0 " + num(width_px) + " " +
                    num(height_px) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(width_px) + "\" height=\"" + num(height_px) +
         "\" fill=\"#ffffff\"/>\n";
  if (w.grid) detail::append_grid(out, *w.grid, hm, st, "#444444");
  for (const auto& c : w.static_circles)
    detail::append_circle(out, c.center, c.radius, hm, st, "fill=\"#777777\"");
  for (const auto& a : w.agents)
    detail::append_circle(out, a.pose.position(), a.radius, hm, st,
                          "fill=\"#e8a33d\" stroke=\"#9c6b1e\"");

  if (!traj.empty()) {
    out += "<polyline fill=\"none\" stroke=\"#3d7be8\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < traj.size(); ++i) {
      if (i > 0) out += ' ';
      out += num(detail::to_x(traj[i].x, st)) + "," + num(detail::flip_y(traj[i].y, hm, st));
    }
    out += "\"/>\n";
    detail::append_circle(out, traj.front().position(), 0.12, hm, st, "fill=\"#3d7be8\"");
    detail::append_circle(out, traj.back().position(), 0.12, hm, st,
                          "fill=\"none\" stroke=\"#3d7be8\" stroke-width=\"2\"");
  }
  detail::append_circle(out, w.goal, 0.15, hm, st,
                        "fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"2\"");

  if (skills != nullptr && !skills->empty()) {
    double x0 = st.margin;
    double y0 = map_px + 14.0;
    double col = (width_px - 2 * st.margin) / static_cast<double>(skills->size());
    for (int k = 0; k < 5; ++k) {
      out += "<text x=\"" + num(x0) + "\" y=\"" + num(y0 + k * row_px - 2.0) +
             "\" font-size=\"8\" fill=\"#333333\">" + kSkillLabels[static_cast<std::size_t>(k)] +
             "</text>\n";
      for (std::size_t t = 0; t < skills->size(); ++t) {
        double v = (*skills)[t][static_cast<std::size_t>(k)];
        double o = w_max > 0.0 ? v / w_max : 0.0;
        out += "<rect class=\"sk\" x=\"" + num(x0 + t * col) + "\" y=\"" + num(y0 + k * row_px) +
               "\" width=\"" + num(col) + "\" height=\"" + num(row_px - 2.0) + "\" fill=\"" +
               kSkillColors[static_cast<std::size_t>(k)] + "\" fill-opacity=\"" + num(o) +
               "\"/>\n";
      }
    }
  }
  out += "</svg>\n";
  return out;
}

struct Series {
  std::string label;
  std::vector<Vec2> points;  // x ascending expected, not required
};

// Line chart with auto-scaled axes and min/max tick labels.
inline std::string curves_svg(const std::vector<Series>& series, const std::string& title,
                              const std::string& x_label, const std::string& y_label,
                              double width_px = 640, double height_px = 400) {
  static constexpr std::array<const char*, 6> palette = {"#1f77b4", "#d62728", "#2ca02c",
                                                         "#9467bd", "#ff7f0e", "#8c564b"};
  double lo_x = 0.0, hi_x = 1.0, lo_y = 0.0, hi_y = 1.0;
  bool any = false;
  for (const auto& s : series)
    for (const auto& p : s.points) {
      if (!any) {
        lo_x = hi_x = p.x;
        lo_y = hi_y = p.y;
        any = true;
      } else {
        lo_x = std::min(lo_x, p.x);
        hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_y = std::max(hi_y, p.y);
      }
    }
  if (hi_x == lo_x) hi_x = lo_x + 1.0;
  if (hi_y == lo_y) hi_y = lo_y + 1.0;
  const double ml = 56.0, mr = 16.0, mt = 28.0, mb = 40.0;
  auto px = [&](double x) { return ml + (x - lo_x) / (hi_x - lo_x) * (width_px - ml - mr); };
  auto py = [&](double y) {
    return height_px - mb - (y - lo_y) / (hi_y - lo_y) * (height_px - mt - mb);
  };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_px) +
                    "\" height=\"" + num(height_px) + "\" viewBox=\"0 0 " + num(width_px) + " " +
                    num(height_px) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(width_px) + "\" height=\"" + num(height_px) +
         "\" fill=\"#ffffff\"/>\n";
  out += "<text x=\"" + num(width_px / 2) + "\" y=\"18\" font-size=\"13\" text-anchor=\"middle\" "
         "fill=\"#111111\">" + title + "</text>\n";
  // axes
  out += "<line x1=\"" + num(ml) + "\" y1=\"" + num(height_px - mb) + "\" x2=\"" +
         num(width_px - mr) + "\" y2=\"" + num(height_px - mb) +
         "\" stroke=\"#333333\"/>\n";
  out += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(ml) + "\" y2=\"" +
         num(height_px - mb) + "\" stroke=\"#333333\"/>\n";
  out += "<text x=\"" + num(ml) + "\" y=\"" + num(height_px - mb + 14.0) +
         "\" font-size=\"9\" fill=\"#333333\">" + num(lo_x) + "</text>\n";
  out += "<text x=\"" + num(width_px - mr) + "\" y=\"" + num(height_px - mb + 14.0) +
         "\" font-size=\"9\" text-anchor=\"end\" fill=\"#333333\">" + num(hi_x) + "</text>\n";
  out += "<text x=\"" + num(ml - 4.0) + "\" y=\"" + num(height_px - mb) +
         "\" font-size=\"9\" text-anchor=\"end\" fill=\"#333333\">" + num(lo_y) + "</text>\n";
  out += "<text x=\"" + num(ml - 4.0) + "\" y=\"" + num(mt + 4.0) +
         "\" font-size=\"9\" text-anchor=\"end\" fill=\"#333333\">" + num(hi_y) + "</text>\n";
  out += "<text x=\"" + num((ml + width_px - mr) / 2) + "\" y=\"" + num(height_px - 8.0) +
         "\" font-size=\"10\" text-anchor=\"middle\" fill=\"#333333\">" + x_label + "</text>\n";
  out += "<text x=\"14\" y=\"" + num((mt + height_px - mb) / 2) +
         "\" font-size=\"10\" text-anchor=\"middle\" fill=\"#333333\" transform=\"rotate(-90 14 " +
         num((mt + height_px - mb) / 2) + ")\">" + y_label + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = palette[si % palette.size()];
    if (!series[si].points.empty()) {
      out += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"";
      out += color;
      out += "\" points=\"";
      for (std::size_t i = 0; i < series[si].points.size(); ++i) {
        if (i > 0) out += ' ';
        out += num(px(series[si].points[i].x)) + "," + num(py(series[si].points[i].y));
      }
      out += "\"/>\n";
    }
    out += "<text x=\"" + num(ml + 8.0) + "\" y=\"" + num(mt + 12.0 + 12.0 * si) +
           "\" font-size=\"10\" fill=\"" + color + "\">" + series[si].label + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

// Per-component mean bars with one-standard-deviation whiskers.
inline std::string skill_bars_svg(const std::array<double, 5>& mean,
                                  const std::array<double, 5>& stddev, double w_max = 0.2,
                                  const std::string& title = "mean skill vector") {
  const double width_px = 360, height_px = 260, ml = 44, mb = 36, mt = 30, mr = 12;
  double span = w_max > 0.0 ? w_max : 0.2;
  auto py = [&](double v) { return height_px - mb - v / span * (height_px - mt - mb); };
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_px) +
                    "\" height=\"" + num(height_px) + "\" viewBox=\"0 0 " + num(width_px) + " " +
                    num(height_px) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(width_px) + "\" height=\"" + num(height_px) +
         "\" fill=\"#ffffff\"/>\n";
  out += "<text x=\"" + num(width_px / 2) + "\" y=\"18\" font-size=\"12\" text-anchor=\"middle\" "
         "fill=\"#111111\">" + title + "</text>\n";
  out += "<line x1=\"" + num(ml) + "\" y1=\"" + num(height_px - mb) + "\" x2=\"" +
         num(width_px - mr) + "\" y2=\"" + num(height_px - mb) + "\" stroke=\"#333333\"/>\n";
  out += "<text x=\"" + num(ml - 4.0) + "\" y=\"" + num(py(0.0)) +
         "\" font-size=\"9\" text-anchor=\"end\" fill=\"#333333\">0</text>\n";
  out += "<text x=\"" + num(ml - 4.0) + "\" y=\"" + num(py(span) + 4.0) +
         "\" font-size=\"9\" text-anchor=\"end\" fill=\"#333333\">" + num(span) + "</text>\n";
  double band = (width_px - ml - mr) / 5.0;
  for (int k = 0; k < 5; ++k) {
    double x0 = ml + k * band + band * 0.2;
    double bw = band * 0.6;
    double m = std::clamp(mean[static_cast<std::size_t>(k)], 0.0, span);
    out += "<rect x=\"" + num(x0) + "\" y=\"" + num(py(m)) + "\" width=\"" + num(bw) +
           "\" height=\"" + num(py(0.0) - py(m)) + "\" fill=\"" +
           kSkillColors[static_cast<std::size_t>(k)] + "\"/>\n";
    double lo = std::clamp(m - stddev[static_cast<std::size_t>(k)], 0.0, span);
    double hi = std::clamp(m + stddev[static_cast<std::size_t>(k)], 0.0, span);
    double cx = x0 + bw / 2;
    out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(py(lo)) + "\" x2=\"" + num(cx) +
           "\" y2=\"" + num(py(hi)) + "\" stroke=\"#111111\"/>\n";
    out += "<text x=\"" + num(cx) + "\" y=\"" + num(height_px - mb + 14.0) +
           "\" font-size=\"9\" text-anchor=\"middle\" fill=\"#333333\">" +
           kSkillLabels[static_cast<std::size_t>(k)] + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace svg
}  // namespace navskills
