#include "depthlayers/core/compose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace depthlayers {

namespace {

void require_valid(const DepthMap& d, const char* what) {
  if (!d.fully_valid()) throw DataError(std::string(what) + ": compositing requires fully valid depth");
}

inline double blend(double alpha, double a, double b) { return alpha * a + (1.0 - alpha) * b; }

}  // namespace

DepthMap composite(const DepthMap& a, const DepthMap& b, const Mask& m) {
  require_same_size(a.size(), b.size(), "composite layers");
  require_same_size(a.size(), m.size(), "composite mask");
  require_valid(a, "composite");
  require_valid(b, "composite");
  DepthMap out(a.width(), a.height());
  for (std::size_t i = 0; i < out.count(); ++i) out[i] = blend(m[i], a[i], b[i]);
  return out;
}

RgbImage composite(const RgbImage& a, const RgbImage& b, const Mask& m) {
  require_same_size(a.size(), b.size(), "composite images");
  require_same_size(a.size(), m.size(), "composite mask");
  RgbImage out(a.width(), a.height());
  for (int c = 0; c < 3; ++c) {
    auto pa = a.plane(c);
    auto pb = b.plane(c);
    auto po = out.plane(c);
    for (std::size_t i = 0; i < po.size(); ++i) po[i] = blend(m[i], pa[i], pb[i]);
  }
  return out;
}

DepthMap merge_layers(const DepthMap& layer1, const DepthMap& layer2, const Mask& m) {
  return composite(layer1, layer2, m);
}

NormalizedDepth normalize_depth(const DepthMap& d) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.count(); ++i) {
    if (!d.is_valid(i)) continue;
    if (!std::isfinite(d[i])) throw DataError("normalize_depth: non-finite valid pixel");
    lo = std::min(lo, d[i]);
    hi = std::max(hi, d[i]);
  }

  NormalizedDepth result{d, false};
  DepthMap& out = result.depth;
  if (!(hi > lo)) {
    result.degenerate = true;
    for (std::size_t i = 0; i < out.count(); ++i) out[i] = d.is_valid(i) ? kDepthRangeMax / 2.0 : 0.0;
    return result;
  }
  if (lo == 0.0 && hi == kDepthRangeMax) {
    for (std::size_t i = 0; i < out.count(); ++i)
      if (!d.is_valid(i)) out[i] = 0.0;
    return result;
  }
  const double scale = kDepthRangeMax / (hi - lo);
  for (std::size_t i = 0; i < out.count(); ++i) {
    out[i] = d.is_valid(i) ? std::clamp((d[i] - lo) * scale, 0.0, kDepthRangeMax) : 0.0;
  }
  return result;
}

AlignmentResult align_scale_shift(const DepthMap& pred, const DepthMap& gt) {
  require_same_size(pred.size(), gt.size(), "align_scale_shift");

  std::size_t n = 0;
  double mean_p = 0.0;
  double mean_g = 0.0;
  for (std::size_t i = 0; i < pred.count(); ++i) {
    if (!pred.is_valid(i) || !gt.is_valid(i)) continue;
    ++n;
    mean_p += pred[i];
    mean_g += gt[i];
  }
  if (n == 0) throw DataError("align_scale_shift: no valid overlap");
  mean_p /= static_cast<double>(n);
  mean_g /= static_cast<double>(n);

  // Centred normal equations: s = cov(p,g)/var(p), t = mean_g - s*mean_p.
  double spp = 0.0;
  double spg = 0.0;
  for (std::size_t i = 0; i < pred.count(); ++i) {
    if (!pred.is_valid(i) || !gt.is_valid(i)) continue;
    const double dp = pred[i] - mean_p;
    spp += dp * dp;
    spg += dp * (gt[i] - mean_g);
  }

  AlignmentResult r;
  r.overlap = n;
  if (n < 2 || spp <= std::numeric_limits<double>::min()) {
    r.scale = 0.0;
    r.shift = mean_g;
    r.degenerate = true;
  } else {
    r.scale = spg / spp;
    r.shift = mean_g - r.scale * mean_p;
  }
  r.aligned = pred;
  for (std::size_t i = 0; i < r.aligned.count(); ++i) r.aligned[i] = r.scale * pred[i] + r.shift;
  return r;
}

}  // namespace depthlayers
