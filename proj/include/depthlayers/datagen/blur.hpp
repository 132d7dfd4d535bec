#pragma once

#include <vector>

#include "depthlayers/core/raster.hpp"

namespace depthlayers {

/// Normalised 1-D Gaussian taps of radius ceil(3*sigma). sigma == 0 yields {1}.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with replicate border. sigma == 0 is identity.
DepthMap gaussian_blur(const DepthMap& d, double sigma);

}  // namespace depthlayers
