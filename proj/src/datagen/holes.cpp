#include "depthlayers/datagen/holes.hpp"

#include <algorithm>
#include <deque>

#include "depthlayers/datagen/morphology.hpp"

namespace depthlayers {

namespace {

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

}  // namespace

std::vector<Hole> find_holes(const Mask& m) {
  if (!m.is_binary()) throw InvalidArgument("find_holes requires a binary mask");
  const int w = m.width();
  const int h = m.height();
  // 0 = unvisited, 1 = foreground or border-connected background, 2 = hole
  std::vector<std::uint8_t> state(m.count(), 0);
  std::deque<std::pair<int, int>> queue;

  auto seed = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    if (state[i] == 0 && !m.on(i)) {
      state[i] = 1;
      queue.emplace_back(x, y);
    }
  };
  auto flood = [&](std::uint8_t label, Hole* collect) {
    while (!queue.empty()) {
      auto [x, y] = queue.front();
      queue.pop_front();
      if (collect) collect->push_back(static_cast<std::size_t>(y) * w + x);
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx[k];
        const int ny = y + kDy[k];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
        if (state[ni] != 0 || m.on(ni)) continue;
        state[ni] = label;
        queue.emplace_back(nx, ny);
      }
    }
  };

  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  flood(1, nullptr);

  std::vector<Hole> holes;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (state[i] != 0 || m.on(i)) continue;
      state[i] = 2;
      queue.emplace_back(x, y);
      Hole hole;
      flood(2, &hole);
      std::sort(hole.begin(), hole.end());
      holes.push_back(std::move(hole));
    }
  }
  return holes;
}

std::vector<std::size_t> hole_ring(Size size, const Hole& hole, int width) {
  if (hole.empty() || width <= 0) return {};
  const int w = size.width;
  int x0 = w, y0 = size.height, x1 = -1, y1 = -1;
  for (std::size_t i : hole) {
    const int x = static_cast<int>(i % w);
    const int y = static_cast<int>(i / w);
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  const int lx = std::max(0, x0 - width);
  const int ly = std::max(0, y0 - width);
  const int hx = std::min(size.width - 1, x1 + width);
  const int hy = std::min(size.height - 1, y1 + width);
  Raster<double> local(hx - lx + 1, hy - ly + 1, 0.0);
  for (std::size_t i : hole) local(static_cast<int>(i % w) - lx, static_cast<int>(i / w) - ly) = 1.0;
  const Raster<double> grown = dilate(local, 2 * width + 1, 1, Border::zero);

  std::vector<std::size_t> ring;
  for (int y = 0; y < local.height(); ++y) {
    for (int x = 0; x < local.width(); ++x) {
      if (grown(x, y) > 0.0 && local(x, y) == 0.0) {
        ring.push_back(static_cast<std::size_t>(y + ly) * w + static_cast<std::size_t>(x + lx));
      }
    }
  }
  return ring;
}

HoleStats hole_stats(const DepthMap& d, const Hole& hole, int ring_width) {
  HoleStats s;
  if (hole.empty()) return s;
  for (std::size_t i : hole) s.mean_inside += d[i];
  s.mean_inside /= static_cast<double>(hole.size());
  const auto ring = hole_ring(d.size(), hole, ring_width);
  if (ring.empty()) {
    s.mean_ring = s.mean_inside;
    return s;
  }
  for (std::size_t i : ring) s.mean_ring += d[i];
  s.mean_ring /= static_cast<double>(ring.size());
  return s;
}

}  // namespace depthlayers
