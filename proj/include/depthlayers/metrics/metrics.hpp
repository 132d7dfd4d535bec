#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "depthlayers/core/random.hpp"
#include "depthlayers/core/raster.hpp"

namespace depthlayers {

struct MetricOptions {
  double r3_threshold = 0.05;
  double whdr_delta = 0.1;
  std::optional<std::size_t> whdr_pairs = 10000;  // nullopt = every pair
  std::uint64_t whdr_seed = 0;
  double edge_threshold = 0.05;
  double edge_truncation = 10.0;
  int boundary_erode = 3;
  int boundary_dilate = 5;
  double min_instance_fraction = 0.01;
  bool operator==(const MetricOptions&) const = default;
};

/// Root mean squared difference over jointly valid pixels.
double rmse(const DepthMap& pred, const DepthMap& gt);

struct WhdrResult {
  double value = 0.0;
  std::size_t pairs = 0;
  bool degenerate = false;  // ground truth constant on valid pixels
};

/// Ordinal label of (a, b): +1 if a/b > 1+delta, -1 if a/b < 1/(1+delta), else 0.
int ordinal_label(double a, double b, double delta);

/// Fraction of point pairs whose ordinal relation differs between pred and gt.
/// `pairs` == nullopt evaluates every unordered pair of valid pixels.
WhdrResult whdr(const DepthMap& pred, const DepthMap& gt, std::optional<std::size_t> pairs, double delta, Rng& rng);

/// Boundary band of an instance mask: dilate(m - erode(m)). Erosion treats the frame as background.
Mask mask_boundary(const Mask& m, int erode_kernel = 3, int dilate_kernel = 5);

struct InstanceBoundaryError {
  std::uint32_t id = 0;
  std::size_t pixels = 0;
  std::size_t boundary_pixels = 0;
  double rmse = 0.0;
  bool operator==(const InstanceBoundaryError&) const = default;
};

struct MbeResult {
  double value = 0.0;
  std::vector<InstanceBoundaryError> instances;
};

/// Mean over qualifying instances of the RMSE on each instance's boundary band.
MbeResult mbe(const DepthMap& pred, const DepthMap& gt, const InstanceMap& inst, const MetricOptions& opts = {});

struct R3Result {
  double value = 1.0;
  std::size_t improved = 0;
  std::size_t worsened = 0;
  bool no_change = false;
};

/// Pixels improved by more than t over pixels worsened by more than t (absolute error).
R3Result r3(const DepthMap& refined, const DepthMap& initial, const DepthMap& gt, double threshold = 0.05);

/// |initial - gt| - |refined - gt| per pixel; positive where refinement helped. Invalid pixels read 0.
Raster<double> improvement_map(const DepthMap& initial, const DepthMap& refined, const DepthMap& gt);

/// Forward-difference gradient magnitude above `threshold`.
Raster<std::uint8_t> depth_edges(const DepthMap& d, double threshold);

/// Exact Euclidean distance to the nearest set pixel (infinity when none).
Raster<double> distance_transform(const Raster<std::uint8_t>& features);

struct BoundaryError {
  double accuracy = 0.0;      // predicted edges -> ground-truth edges
  double completeness = 0.0;  // ground-truth edges -> predicted edges
  std::size_t pred_edges = 0;
  std::size_t gt_edges = 0;
};

/// Truncated chamfer distances between depth-edge sets.
BoundaryError boundary_error(const DepthMap& pred, const DepthMap& gt, double edge_threshold = 0.05,
                             double truncation = 10.0);

struct MetricsReport {
  double rmse = 0.0;
  double whdr = 0.0;
  double mbe = 0.0;
  std::optional<double> r3;
  double eps_acc = 0.0;
  double eps_comp = 0.0;
  std::vector<InstanceBoundaryError> instances;
  std::size_t whdr_pairs = 0;
  std::size_t boundary_pixels = 0;
  std::size_t r3_improved = 0;
  std::size_t r3_worsened = 0;
  double align_scale = 1.0;
  double align_shift = 0.0;
  bool align_degenerate = false;
  bool whdr_degenerate = false;
  bool r3_no_change = false;

  bool operator==(const MetricsReport&) const = default;
};

/// Aligns `pred` (and `initial`, when given) to `gt` by least squares, then computes every metric.
MetricsReport evaluate(const DepthMap& pred, const DepthMap& gt, const InstanceMap& inst,
                       const DepthMap* initial = nullptr, const MetricOptions& opts = {});

/// Pairwise-summed mean of each metric over a batch in input order; R3 pools pixel counts.
MetricsReport aggregate(const std::vector<MetricsReport>& reports);

}  // namespace depthlayers
