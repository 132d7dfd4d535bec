#pragma once

#include <cstddef>
#include <vector>

#include "depthlayers/core/random.hpp"
#include "depthlayers/core/raster.hpp"

namespace depthlayers {

/// One enclosed background region, as raster indices in scan order.
using Hole = std::vector<std::size_t>;

/// Zero-valued 4-connected components of a binary mask that cannot reach the
/// frame border through zero pixels. Ordered by their first pixel in scan order.
std::vector<Hole> find_holes(const Mask& m);

/// Pixels within Chebyshev distance `width` of the hole, excluding the hole itself.
std::vector<std::size_t> hole_ring(Size size, const Hole& hole, int width);

struct HoleStats {
  double mean_inside = 0.0;
  double mean_ring = 0.0;
};

HoleStats hole_stats(const DepthMap& d, const Hole& hole, int ring_width);

}  // namespace depthlayers
