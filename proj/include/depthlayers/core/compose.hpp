#pragma once

#include "depthlayers/core/raster.hpp"

namespace depthlayers {

/// Pixelwise alpha blend `alpha*a + (1-alpha)*b`. Inputs must be fully valid.
DepthMap composite(const DepthMap& a, const DepthMap& b, const Mask& m);
RgbImage composite(const RgbImage& a, const RgbImage& b, const Mask& m);

/// Layer merge. Same arithmetic as composite; soft masks are allowed here.
DepthMap merge_layers(const DepthMap& layer1, const DepthMap& layer2, const Mask& m);

struct NormalizedDepth {
  DepthMap depth;
  bool degenerate = false;  // constant input, mapped to 5.0
};

inline constexpr double kDepthRangeMax = 10.0;

/// Affine min-max map of valid pixels onto [0, 10]. Invalid pixels are set to 0.
NormalizedDepth normalize_depth(const DepthMap& d);

struct AlignmentResult {
  double scale = 0.0;
  double shift = 0.0;
  DepthMap aligned;
  bool degenerate = false;
  std::size_t overlap = 0;
};

/// Least-squares scale and shift mapping `pred` onto `gt` over jointly valid pixels.
AlignmentResult align_scale_shift(const DepthMap& pred, const DepthMap& gt);

}  // namespace depthlayers
