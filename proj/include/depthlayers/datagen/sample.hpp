#pragma once

#include <cstdint>
#include <span>

#include "depthlayers/datagen/masks.hpp"
#include "depthlayers/datagen/perturb.hpp"

namespace depthlayers {

struct RgbdRecord {
  RgbImage rgb;
  DepthMap depth;
};

/// Piecewise-planar inverse depth with shading correlated to depth.
struct SceneOptions {
  int planes = 1;            // 1 or 2 pieces separated by a random line
  double max_tilt = 1.5;     // total depth change across the frame per plane
  double texture = 0.04;     // RGB texture amplitude
  bool operator==(const SceneOptions&) const = default;
};

RgbdRecord synthetic_scene(Size size, Rng& rng, const SceneOptions& options = {});

struct TrainingSample {
  RgbImage rgb;        // composite image
  DepthMap depth;      // composite depth (ground truth of the merged output)
  DepthMap perturbed;  // simulated estimate
  Mask mask;
  DepthMap layer1;     // depth of the masked source
  DepthMap layer2;     // depth of the background source
  std::uint64_t seed = 0;
  MaskCategory category = MaskCategory::object;
  PerturbConfig perturb;
};

/// Composites two RGB-D records with `m` at `patch` size and perturbs the result.
/// Sources are bilinearly resized, the mask nearest-resized.
TrainingSample generate_sample(const RgbdRecord& source_a, const RgbdRecord& source_b, const Mask& m,
                               const PerturbConfig& cfg, std::uint64_t seed, Size patch);

/// Self-contained sample synthesis: procedural scenes, sampled mask category,
/// object-aware crop. Each index derives its own seed from the master seed.
struct GeneratorOptions {
  Size patch{64, 64};
  double canvas_scale = 1.5;     // masks are drawn on a larger canvas and cropped
  MaskMix mix;
  PerturbConfig perturb;
  double hole_prob_for_holed = 0.5;
  SceneOptions scene;
  double min_instance_fraction = 0.01;
  bool operator==(const GeneratorOptions&) const = default;
};

/// A non-empty `mask_pool` replaces the procedural masks: each sample draws one pool
/// entry uniformly. Pool masks are reported as the object category and receive hole
/// perturbation with `hole_prob_for_holed` when they contain holes.
TrainingSample synthesize_training_sample(const GeneratorOptions& options, std::uint64_t master_seed,
                                          std::uint64_t index, std::span<const Mask> mask_pool = {});

/// Identity stand-in for the photometric RGB augmentations; enabled flag only gates the call.
RgbImage augment_rgb(const RgbImage& rgb, bool enabled);

}  // namespace depthlayers
