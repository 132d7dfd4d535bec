#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "depthlayers/core/raster.hpp"

namespace depthlayers::viz {

using Rgb8 = std::array<std::uint8_t, 3>;

/// Sequential palette from dark violet through orange to pale yellow. Luma
/// (0.299 R + 0.587 G + 0.114 B) increases with `t` in [0, 1] up to 8-bit rounding.
Rgb8 sequential_color(double t);
/// Blue for positive, red for negative, white at zero; `t` in [-1, 1].
Rgb8 diverging_color(double t);
inline constexpr Rgb8 kNeutral{255, 255, 255};
inline constexpr Rgb8 kInvalidColor{0, 0, 0};

double luma(const Rgb8& c);

/// Depth coloured over [lo, hi] (defaults to the working range); invalid pixels are black.
std::vector<std::uint8_t> colorize_depth(const DepthMap& d, double lo = 0.0, double hi = 10.0);
/// Signed map coloured over [-range, range].
std::vector<std::uint8_t> colorize_signed(const Raster<double>& map, double range);

/// Fixed pinhole camera for point clouds: 60 degree vertical field of view,
/// principal point at the image centre, square pixels. Inverse depth d maps to
/// z = 1 / max(d, kMinInverseDepth).
inline constexpr double kVerticalFovDegrees = 60.0;
inline constexpr double kMinInverseDepth = 0.05;

struct Point {
  double x, y, z;
  Rgb8 color;
};
/// One point per valid pixel, in row-major order. Camera axes: x right, y down, z forward.
std::vector<Point> back_project(const DepthMap& d, const RgbImage* rgb);
/// ASCII PLY with float coordinates and uchar colours.
std::string encode_ply(const std::vector<Point>& points);

}  // namespace depthlayers::viz
