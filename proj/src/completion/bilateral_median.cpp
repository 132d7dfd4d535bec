#include <algorithm>
#include <cmath>

#include "depthlayers/completion/completion.hpp"

namespace depthlayers {

DepthMap bilateral_median(const DepthMap& d, const RgbImage& guide, int window, double sigma_color) {
  require_same_size(d.size(), guide.size(), "bilateral_median");
  if (window < 1 || window % 2 == 0) throw InvalidArgument("bilateral_median window must be odd");
  if (!(sigma_color > 0.0)) throw InvalidArgument("bilateral_median sigma must be positive");
  if (window == 1) return d;

  const int r = window / 2;
  const double inv2s2 = 1.0 / (2.0 * sigma_color * sigma_color);
  DepthMap out = d;
  std::vector<std::pair<double, double>> samples;
  samples.reserve(static_cast<std::size_t>(window * window));

  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      if (!d.is_valid(d.values().index(x, y))) continue;
      samples.clear();
      double total = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int qx = x + dx, qy = y + dy;
          if (!d.values().contains(qx, qy) || !d.is_valid(d.values().index(qx, qy))) continue;
          double dist2 = 0.0;
          for (int c = 0; c < 3; ++c) {
            const double diff = guide(c, qx, qy) - guide(c, x, y);
            dist2 += diff * diff;
          }
          const double wgt = std::exp(-dist2 * inv2s2);
          samples.emplace_back(d(qx, qy), wgt);
          total += wgt;
        }
      }
      std::sort(samples.begin(), samples.end());
      const double half = 0.5 * total;
      double cum = 0.0;
      double pick = samples.back().first;
      for (const auto& [value, wgt] : samples) {
        cum += wgt;
        if (cum >= half) {
          pick = value;
          break;
        }
      }
      out(x, y) = pick;
    }
  }
  return out;
}

}  // namespace depthlayers
