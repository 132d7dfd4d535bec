#pragma once

#include <vector>

#include "depthlayers/core/raster.hpp"

namespace depthlayers {

/// Region to complete: mask pixels that are on are unknown.
struct FillRegion {
  Mask unknown;

  /// Known pixels within Euclidean distance `radius` of an unknown pixel.
  /// These are the only original values a fill of that radius can read.
  std::vector<std::size_t> boundary_band(int radius) const;
};

inline constexpr int kDefaultFillRadius = 5;

/// Fast-marching propagation fill.
///
/// Unknown pixels are visited in increasing arrival time of a front started
/// at the known boundary. Each one becomes a normalised combination of the
/// already-known values in a disc of `radius`, weighted by inverse cubed
/// distance, alignment with the front normal, and level-set proximity.
/// Invalid depth pixels are treated as unknown. Known pixels are untouched.
DepthMap propagate_fill(const DepthMap& d, const FillRegion& fill, int radius = kDefaultFillRadius);

inline constexpr int kDefaultMedianWindow = 7;
inline constexpr double kDefaultMedianSigmaColor = 0.1;

/// Colour-guided weighted median. Weights are exp(-|c(q) - c(p)|^2 / (2 sigma^2))
/// against the centre pixel's guide colour; the result is the smallest window
/// value whose cumulative weight reaches half the total.
DepthMap bilateral_median(const DepthMap& d, const RgbImage& guide, int window = kDefaultMedianWindow,
                          double sigma_color = kDefaultMedianSigmaColor);

}  // namespace depthlayers
