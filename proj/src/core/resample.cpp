#include "depthlayers/core/resample.hpp"

#include <algorithm>
#include <cmath>

namespace depthlayers {

namespace {

void check_rect(Size src, Rect r) {
  if (r.width <= 0 || r.height <= 0 || r.x < 0 || r.y < 0 || r.x + r.width > src.width ||
      r.y + r.height > src.height) {
    throw InvalidArgument("crop window outside source " + to_string(src));
  }
}

template <typename T>
Raster<T> crop_raster(const Raster<T>& src, Rect r) {
  check_rect(src.size(), r);
  Raster<T> out(r.width, r.height);
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) out(x, y) = src(r.x + x, r.y + y);
  return out;
}

struct Tap {
  int i0;
  int i1;
  double w1;
};

std::vector<Tap> bilinear_taps(int src, int dst) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (int i = 0; i < dst; ++i) {
    double s = (i + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, src - 1);
    taps[static_cast<std::size_t>(i)] = Tap{i0, i1, s - i0};
  }
  return taps;
}

template <typename Get>
double bilerp(const Tap& tx, const Tap& ty, Get get) {
  const double top = (1.0 - tx.w1) * get(tx.i0, ty.i0) + tx.w1 * get(tx.i1, ty.i0);
  const double bottom = (1.0 - tx.w1) * get(tx.i0, ty.i1) + tx.w1 * get(tx.i1, ty.i1);
  return (1.0 - ty.w1) * top + ty.w1 * bottom;
}

std::vector<int> nearest_taps(int src, int dst) {
  std::vector<int> taps(static_cast<std::size_t>(dst));
  for (int i = 0; i < dst; ++i) {
    const int s = static_cast<int>(std::floor((i + 0.5) * static_cast<double>(src) / dst));
    taps[static_cast<std::size_t>(i)] = std::min(s, src - 1);
  }
  return taps;
}

template <typename T>
Raster<T> resize_nearest_raster(const Raster<T>& src, Size to) {
  if (to.width <= 0 || to.height <= 0 || src.empty()) throw InvalidArgument("resize to empty size");
  const auto tx = nearest_taps(src.width(), to.width);
  const auto ty = nearest_taps(src.height(), to.height);
  Raster<T> out(to.width, to.height);
  for (int y = 0; y < to.height; ++y)
    for (int x = 0; x < to.width; ++x) out(x, y) = src(tx[static_cast<std::size_t>(x)], ty[static_cast<std::size_t>(y)]);
  return out;
}

}  // namespace

DepthMap crop(const DepthMap& d, Rect r) {
  DepthMap out(crop_raster(d.values(), r));
  if (d.validity()) out.set_validity(crop_raster(*d.validity(), r));
  return out;
}

RgbImage crop(const RgbImage& img, Rect r) {
  check_rect(img.size(), r);
  RgbImage out(r.width, r.height);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < r.height; ++y)
      for (int x = 0; x < r.width; ++x) out(c, x, y) = img(c, r.x + x, r.y + y);
  return out;
}

Mask crop(const Mask& m, Rect r) { return Mask(crop_raster(m.alpha(), r), m.kind()); }

InstanceMap crop(const InstanceMap& m, Rect r) { return crop_raster(m, r); }

DepthMap resize_bilinear(const DepthMap& d, Size to) {
  if (d.size() == to) return d;
  if (to.width <= 0 || to.height <= 0 || d.count() == 0) throw InvalidArgument("resize to empty size");
  if (!d.fully_valid()) throw DataError("bilinear resize requires fully valid depth");
  const auto tx = bilinear_taps(d.width(), to.width);
  const auto ty = bilinear_taps(d.height(), to.height);
  DepthMap out(to.width, to.height);
  for (int y = 0; y < to.height; ++y)
    for (int x = 0; x < to.width; ++x)
      out(x, y) = bilerp(tx[static_cast<std::size_t>(x)], ty[static_cast<std::size_t>(y)],
                         [&](int sx, int sy) { return d(sx, sy); });
  return out;
}

RgbImage resize_bilinear(const RgbImage& img, Size to) {
  if (img.size() == to) return img;
  if (to.width <= 0 || to.height <= 0) throw InvalidArgument("resize to empty size");
  const auto tx = bilinear_taps(img.width(), to.width);
  const auto ty = bilinear_taps(img.height(), to.height);
  RgbImage out(to.width, to.height);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < to.height; ++y)
      for (int x = 0; x < to.width; ++x)
        out(c, x, y) = bilerp(tx[static_cast<std::size_t>(x)], ty[static_cast<std::size_t>(y)],
                              [&](int sx, int sy) { return img(c, sx, sy); });
  return out;
}

Mask resize_nearest(const Mask& m, Size to) {
  if (m.size() == to) return m;
  return Mask(resize_nearest_raster(m.alpha(), to), m.kind());
}

InstanceMap resize_nearest(const InstanceMap& m, Size to) {
  if (m.size() == to) return m;
  return resize_nearest_raster(m, to);
}

}  // namespace depthlayers
