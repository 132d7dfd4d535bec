#pragma once

#include "depthlayers/core/random.hpp"
#include "depthlayers/core/raster.hpp"

namespace depthlayers {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

struct IntInterval {
  int lo = 0;
  int hi = 0;
  bool operator==(const IntInterval&) const = default;
};

/// Magnitudes of the synthetic depth-estimate degradations.
struct PerturbConfig {
  IntInterval morph_iters{1, 5};
  int morph_kernel = 3;
  Interval blur_small_sigma{0.0, 1.0};
  Interval blur_large_sigma{1.0, 5.0};
  double blur_small_prob = 0.5;
  double order_scheme_prob = 0.5;
  int hole_ring_width = 10;
  double hole_perturb_prob = 0.0;

  void validate() const;
  bool operator==(const PerturbConfig&) const = default;
};

/// Iteration counts and ordering drawn for one morphology perturbation.
struct MorphPlan {
  int dilate_iters = 0;
  int erode_iters = 0;
  bool dilate_first = true;  // dilate, erode, erode, dilate; otherwise erode, dilate, dilate, erode
};

MorphPlan draw_morph_plan(const PerturbConfig& cfg, Rng& rng);
DepthMap apply_morph_plan(const DepthMap& d, const MorphPlan& plan, int kernel);

DepthMap random_morph(const DepthMap& d, const PerturbConfig& cfg, Rng& rng);

/// Replaces every hole of `m` with one uniform draw between the hole mean and its ring mean.
DepthMap hole_perturb(const DepthMap& d, const Mask& m, const PerturbConfig& cfg, Rng& rng);

/// Morphology, then Gaussian blur, then (with probability) hole perturbation.
DepthMap perturb(const DepthMap& d, const Mask& m, const PerturbConfig& cfg, Rng& rng);

}  // namespace depthlayers
