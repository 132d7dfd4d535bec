#include "depthlayers/cli/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace depthlayers::viz {

namespace {

struct Stop {
  double t;
  double r, g, b;
};

// Luma of consecutive stops increases, and luma is linear in the channels,
// so linear interpolation keeps it monotone.
constexpr Stop kSequential[] = {
    {0.00, 0.02, 0.01, 0.08}, {0.25, 0.32, 0.07, 0.47}, {0.50, 0.72, 0.19, 0.42},
    {0.75, 0.98, 0.52, 0.16}, {1.00, 0.99, 0.97, 0.64},
};

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

Rgb8 sequential_color(double t) {
  if (!std::isfinite(t)) return kInvalidColor;
  t = std::clamp(t, 0.0, 1.0);
  std::size_t k = 0;
  while (k + 2 < std::size(kSequential) && t > kSequential[k + 1].t) ++k;
  const Stop& a = kSequential[k];
  const Stop& b = kSequential[k + 1];
  const double u = (t - a.t) / (b.t - a.t);
  return {to_byte(a.r + u * (b.r - a.r)), to_byte(a.g + u * (b.g - a.g)), to_byte(a.b + u * (b.b - a.b))};
}

Rgb8 diverging_color(double t) {
  if (!std::isfinite(t)) return kInvalidColor;
  t = std::clamp(t, -1.0, 1.0);
  const double a = std::abs(t);
  if (t >= 0.0) return {to_byte(1.0 - 0.85 * a), to_byte(1.0 - 0.6 * a), to_byte(1.0 - 0.2 * a)};
  return {to_byte(1.0 - 0.2 * a), to_byte(1.0 - 0.85 * a), to_byte(1.0 - 0.8 * a)};
}

double luma(const Rgb8& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

std::vector<std::uint8_t> colorize_depth(const DepthMap& d, double lo, double hi) {
  std::vector<std::uint8_t> out;
  out.reserve(d.count() * 3);
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < d.count(); ++i) {
    const Rgb8 c = d.is_valid(i) ? sequential_color((d[i] - lo) / span) : kInvalidColor;
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

std::vector<std::uint8_t> colorize_signed(const Raster<double>& map, double range) {
  std::vector<std::uint8_t> out;
  out.reserve(map.count() * 3);
  for (double v : map.vector()) {
    const Rgb8 c = range > 0.0 ? diverging_color(v / range) : kNeutral;
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

std::vector<Point> back_project(const DepthMap& d, const RgbImage* rgb) {
  const double f = 0.5 * d.height() / std::tan(0.5 * kVerticalFovDegrees * std::numbers::pi / 180.0);
  const double cx = 0.5 * (d.width() - 1);
  const double cy = 0.5 * (d.height() - 1);
  std::vector<Point> pts;
  for (int v = 0; v < d.height(); ++v)
    for (int u = 0; u < d.width(); ++u) {
      if (!d.is_valid(d.values().index(u, v))) continue;
      const double z = 1.0 / std::max(d(u, v), kMinInverseDepth);
      Rgb8 c{200, 200, 200};
      if (rgb) c = {to_byte((*rgb)(0, u, v)), to_byte((*rgb)(1, u, v)), to_byte((*rgb)(2, u, v))};
      pts.push_back({(u - cx) * z / f, (v - cy) * z / f, z, c});
    }
  return pts;
}

std::string encode_ply(const std::vector<Point>& points) {
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(points.size()) +
                    "\nproperty float x\nproperty float y\nproperty float z\n"
                    "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  char line[128];
  for (const Point& p : points) {
    std::snprintf(line, sizeof line, "%.6f %.6f %.6f %u %u %u\n", p.x, p.y, p.z, p.color[0], p.color[1], p.color[2]);
    out += line;
  }
  return out;
}

}  // namespace depthlayers::viz
