#include "depthlayers/datagen/morphology.hpp"

#include <algorithm>

namespace depthlayers {

namespace {

void check_kernel(int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw InvalidArgument("morphology kernel must be odd and positive");
}

// One separable pass; the square window decomposes into a row and a column extremum.
template <typename Pick>
Raster<double> filter_once(const Raster<double>& src, int radius, Border border, Pick pick) {
  const int w = src.width();
  const int h = src.height();
  Raster<double> rows(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = src(x, y);
      for (int dx = -radius; dx <= radius; ++dx) {
        const int sx = x + dx;
        if (sx < 0 || sx >= w) {
          if (border == Border::zero) acc = pick(acc, 0.0);
          continue;
        }
        acc = pick(acc, src(sx, y));
      }
      rows(x, y) = acc;
    }
  }
  Raster<double> out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = rows(x, y);
      for (int dy = -radius; dy <= radius; ++dy) {
        const int sy = y + dy;
        if (sy < 0 || sy >= h) {
          if (border == Border::zero) acc = pick(acc, 0.0);
          continue;
        }
        acc = pick(acc, rows(x, sy));
      }
      out(x, y) = acc;
    }
  }
  return out;
}

template <typename Pick>
Raster<double> filter(const Raster<double>& src, int kernel, int iters, Border border, Pick pick) {
  check_kernel(kernel);
  if (iters < 0) throw InvalidArgument("morphology iterations must be non-negative");
  Raster<double> cur = src;
  if (kernel == 1 || src.empty()) return cur;
  for (int i = 0; i < iters; ++i) cur = filter_once(cur, kernel / 2, border, pick);
  return cur;
}

constexpr auto kMax = [](double a, double b) { return std::max(a, b); };
constexpr auto kMin = [](double a, double b) { return std::min(a, b); };

}  // namespace

Raster<double> dilate(const Raster<double>& src, int kernel, int iters, Border border) {
  return filter(src, kernel, iters, border, kMax);
}

Raster<double> erode(const Raster<double>& src, int kernel, int iters, Border border) {
  return filter(src, kernel, iters, border, kMin);
}

DepthMap dilate(const DepthMap& d, int kernel, int iters) {
  DepthMap out(dilate(d.values(), kernel, iters));
  if (d.validity()) out.set_validity(*d.validity());
  return out;
}

DepthMap erode(const DepthMap& d, int kernel, int iters) {
  DepthMap out(erode(d.values(), kernel, iters));
  if (d.validity()) out.set_validity(*d.validity());
  return out;
}

Mask dilate(const Mask& m, int kernel, Border border) {
  return Mask(dilate(m.alpha(), kernel, 1, border), m.kind());
}

Mask erode(const Mask& m, int kernel, Border border) {
  return Mask(erode(m.alpha(), kernel, 1, border), m.kind());
}

Mask degrade_mask(const Mask& m, MaskDegradation op, int k) {
  if (!m.is_binary()) throw InvalidArgument("degrade_mask requires a binary mask");
  if (k == 0) return m;
  check_kernel(k);
  if (op == MaskDegradation::opening) return dilate(erode(m, k), k);
  return erode(dilate(m, k), k);
}

const char* to_string(MaskDegradation op) { return op == MaskDegradation::opening ? "opening" : "closing"; }

}  // namespace depthlayers
