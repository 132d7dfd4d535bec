#include <algorithm>
#include <cmath>
#include <queue>

#include "depthlayers/completion/completion.hpp"

namespace depthlayers {

std::vector<std::size_t> FillRegion::boundary_band(int radius) const {
  const int w = unknown.width();
  const int h = unknown.height();
  std::vector<std::size_t> band;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (unknown.on(x, y)) continue;
      bool near = false;
      for (int dy = -radius; dy <= radius && !near; ++dy)
        for (int dx = -radius; dx <= radius && !near; ++dx) {
          if (dx * dx + dy * dy > radius * radius) continue;
          const int nx = x + dx, ny = y + dy;
          if (nx >= 0 && ny >= 0 && nx < w && ny < h && unknown.on(nx, ny)) near = true;
        }
      if (near) band.push_back(static_cast<std::size_t>(y) * w + x);
    }
  }
  return band;
}

namespace {

enum Flag : std::uint8_t { kKnown = 0, kBand = 1, kInside = 2 };

constexpr double kFar = 1e6;

class FastMarcher {
 public:
  FastMarcher(const DepthMap& d, const FillRegion& fill, int radius)
      : w_(d.width()), h_(d.height()), radius_(radius), value_(d.values()), flag_(d.count()), time_(d.count(), 0.0) {
    std::size_t unknown = 0;
    for (std::size_t i = 0; i < d.count(); ++i) {
      const bool inside = fill.unknown.on(i) || !d.is_valid(i);
      flag_[i] = inside ? kInside : kKnown;
      time_[i] = inside ? kFar : 0.0;
      unknown += inside;
    }
    unknown_ = unknown;
    // Known pixels 4-adjacent to the unknown set seed the front.
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x) {
        const std::size_t i = idx(x, y);
        if (flag_[i] != kKnown) continue;
        if (inside(x + 1, y) || inside(x - 1, y) || inside(x, y + 1) || inside(x, y - 1)) {
          flag_[i] = kBand;
          heap_.push({0.0, i});
        }
      }
  }

  std::size_t unknown_count() const { return unknown_; }

  Raster<double> run() {
    while (!heap_.empty()) {
      const Entry top = heap_.top();
      heap_.pop();
      if (flag_[top.index] == kKnown) continue;
      flag_[top.index] = kKnown;
      const int x = static_cast<int>(top.index % static_cast<std::size_t>(w_));
      const int y = static_cast<int>(top.index / static_cast<std::size_t>(w_));
      const int nx[4] = {x - 1, x, x + 1, x};
      const int ny[4] = {y, y - 1, y, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (!in_frame(nx[k], ny[k])) continue;
        const std::size_t ni = idx(nx[k], ny[k]);
        if (flag_[ni] != kInside) continue;
        time_[ni] = arrival(nx[k], ny[k]);
        value_[ni] = interpolate(nx[k], ny[k]);
        flag_[ni] = kBand;
        heap_.push({time_[ni], ni});
      }
    }
    return value_;
  }

 private:
  struct Entry {
    double time;
    std::size_t index;
    bool operator>(const Entry& o) const { return time != o.time ? time > o.time : index > o.index; }
  };

  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(w_) + static_cast<std::size_t>(x); }
  bool in_frame(int x, int y) const { return x >= 0 && y >= 0 && x < w_ && y < h_; }
  bool inside(int x, int y) const { return in_frame(x, y) && flag_[idx(x, y)] == kInside; }
  // Out-of-frame neighbours behave as unreached pixels.
  bool reached(int x, int y) const { return in_frame(x, y) && flag_[idx(x, y)] != kInside; }
  double time_at(int x, int y) const { return in_frame(x, y) ? time_[idx(x, y)] : kFar; }

  // Upwind solution of |grad T| = 1 from one horizontal and one vertical neighbour.
  double solve(int x1, int y1, int x2, int y2) const {
    const double a = time_at(x1, y1);
    const double b = time_at(x2, y2);
    const bool ra = reached(x1, y1);
    const bool rb = reached(x2, y2);
    if (ra && rb) {
      if (std::abs(a - b) >= 1.0) return 1.0 + std::min(a, b);
      return 0.5 * (a + b + std::sqrt(2.0 - (a - b) * (a - b)));
    }
    if (ra) return 1.0 + a;
    if (rb) return 1.0 + b;
    return 1.0 + std::min(a, b);
  }

  double arrival(int x, int y) const {
    return std::min({solve(x, y - 1, x - 1, y), solve(x, y + 1, x - 1, y), solve(x, y - 1, x + 1, y),
                     solve(x, y + 1, x + 1, y)});
  }

  double grad_component(int xm, int ym, int xp, int yp, double t) const {
    const bool rp = reached(xp, yp);
    const bool rm = reached(xm, ym);
    if (rp && rm) return 0.5 * (time_at(xp, yp) - time_at(xm, ym));
    if (rp) return time_at(xp, yp) - t;
    if (rm) return t - time_at(xm, ym);
    return 0.0;
  }

  double interpolate(int x, int y) const {
    const double t = time_[idx(x, y)];
    const double gx = grad_component(x - 1, y, x + 1, y, t);
    const double gy = grad_component(x, y - 1, x, y + 1, t);
    double num = 0.0;
    double den = 0.0;
    for (int dy = -radius_; dy <= radius_; ++dy) {
      for (int dx = -radius_; dx <= radius_; ++dx) {
        const int qx = x + dx, qy = y + dy;
        if (!reached(qx, qy)) continue;
        const double len2 = static_cast<double>(dx * dx + dy * dy);
        if (len2 == 0.0 || len2 > static_cast<double>(radius_ * radius_)) continue;
        const double rx = -dx, ry = -dy;  // from q towards p
        const double dst = 1.0 / (len2 * std::sqrt(len2));
        const double lev = 1.0 / (1.0 + std::abs(time_[idx(qx, qy)] - t));
        double dir = std::abs(rx * gx + ry * gy);
        if (dir <= 0.01) dir = 1e-6;
        const double wgt = dst * lev * dir;
        num += wgt * value_[idx(qx, qy)];
        den += wgt;
      }
    }
    return den > 0.0 ? num / den : 0.0;
  }

  int w_;
  int h_;
  int radius_;
  Raster<double> value_;
  std::vector<std::uint8_t> flag_;
  std::vector<double> time_;
  std::size_t unknown_ = 0;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
};

}  // namespace

DepthMap propagate_fill(const DepthMap& d, const FillRegion& fill, int radius) {
  require_same_size(d.size(), fill.unknown.size(), "propagate_fill");
  if (radius < 1) throw InvalidArgument("propagate_fill radius must be >= 1");
  FastMarcher marcher(d, fill, radius);
  if (marcher.unknown_count() == 0) return d;
  if (marcher.unknown_count() == d.count()) throw DataError("propagate_fill: no known pixels");
  DepthMap out(marcher.run());
  return out;
}

}  // namespace depthlayers
