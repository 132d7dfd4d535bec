#pragma once

#include "depthlayers/core/raster.hpp"

namespace depthlayers {

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

DepthMap crop(const DepthMap& d, Rect r);
RgbImage crop(const RgbImage& img, Rect r);
Mask crop(const Mask& m, Rect r);
InstanceMap crop(const InstanceMap& m, Rect r);

// Bilinear with pixel-centre alignment.
DepthMap resize_bilinear(const DepthMap& d, Size to);
RgbImage resize_bilinear(const RgbImage& img, Size to);
// Nearest keeps masks binary.
Mask resize_nearest(const Mask& m, Size to);
InstanceMap resize_nearest(const InstanceMap& m, Size to);

}  // namespace depthlayers
