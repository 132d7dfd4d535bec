#pragma once

#include "depthlayers/core/raster.hpp"

namespace depthlayers {

// Out-of-frame samples either repeat the nearest edge pixel or read as zero.
enum class Border { replicate, zero };

/// Square-window max filter applied `iters` times. Kernel must be odd.
Raster<double> dilate(const Raster<double>& src, int kernel, int iters = 1, Border border = Border::replicate);
/// Square-window min filter applied `iters` times. Kernel must be odd.
Raster<double> erode(const Raster<double>& src, int kernel, int iters = 1, Border border = Border::replicate);

DepthMap dilate(const DepthMap& d, int kernel, int iters = 1);
DepthMap erode(const DepthMap& d, int kernel, int iters = 1);

Mask dilate(const Mask& m, int kernel, Border border = Border::replicate);
Mask erode(const Mask& m, int kernel, Border border = Border::replicate);

enum class MaskDegradation { opening, closing };

/// Binary opening (erode then dilate) or closing (dilate then erode) with a k x k kernel. k == 0 is identity.
Mask degrade_mask(const Mask& m, MaskDegradation op, int k);

const char* to_string(MaskDegradation op);

}  // namespace depthlayers
