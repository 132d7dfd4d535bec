#include "depthlayers/datagen/blur.hpp"

#include <cmath>

namespace depthlayers {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("gaussian sigma must be finite and >= 0");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : taps) v /= sum;
  return taps;
}

DepthMap gaussian_blur(const DepthMap& d, double sigma) {
  const std::vector<double> taps = gaussian_kernel(sigma);
  if (taps.size() == 1 || d.count() == 0) return d;
  const int radius = static_cast<int>(taps.size() / 2);
  const Raster<double>& src = d.values();
  const int w = d.width();
  const int h = d.height();

  Raster<double> rows(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += taps[static_cast<std::size_t>(k + radius)] * src.clamped(x + k, y);
      rows(x, y) = acc;
    }
  }
  DepthMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += taps[static_cast<std::size_t>(k + radius)] * rows.clamped(x, y + k);
      out(x, y) = acc;
    }
  }
  if (d.validity()) out.set_validity(*d.validity());
  return out;
}

}  // namespace depthlayers
