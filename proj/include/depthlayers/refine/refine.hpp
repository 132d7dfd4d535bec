#pragma once

#include <string>
#include <vector>

#include "depthlayers/core/error.hpp"
#include "depthlayers/core/raster.hpp"

namespace depthlayers {

// Completes the mask==0 part of `perturbed` from the mask==1 part and may
// correct values anywhere. Implementations must be safe for concurrent use.
class RefinerBackend {
 public:
  virtual ~RefinerBackend() = default;
  virtual DepthMap refine_layer(const DepthMap& perturbed, const RgbImage& rgb, const Mask& mask) const = 0;
  virtual std::string name() const = 0;
};

// Returns the input depth. Used to exercise the engine.
class IdentityBackend final : public RefinerBackend {
 public:
  DepthMap refine_layer(const DepthMap& perturbed, const RgbImage& rgb, const Mask& mask) const override;
  std::string name() const override { return "identity"; }
};

// Keeps erode(mask, k) and propagates it over everything else with a fast-marching fill.
class PropagationBackend final : public RefinerBackend {
 public:
  explicit PropagationBackend(int erode_kernel = 5, int radius = 5);
  DepthMap refine_layer(const DepthMap& perturbed, const RgbImage& rgb, const Mask& mask) const override;
  std::string name() const override { return "propagation"; }
  int erode_kernel() const { return erode_kernel_; }

 private:
  int erode_kernel_;
  int radius_;
};

struct LayeredResult {
  DepthMap layer1;  // refined with the mask
  DepthMap layer2;  // refined with the inverted mask
  DepthMap merged;
};

// A backend failure tagged with the layer (1 or 2) that raised it.
class LayerError : public Error {
 public:
  LayerError(int layer, ErrorKind kind, const std::string& what);
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

// Runs the backend with m and with 1 - m and blends the two layers by m.
// A soft m is thresholded at 0.5 for the backend passes and used as-is for the blend.
LayeredResult refine_layered(const RefinerBackend& backend, const DepthMap& d, const RgbImage& rgb, const Mask& m);

// Same, with a different backend for each layer.
LayeredResult refine_layered(const RefinerBackend& layer1_backend, const RefinerBackend& layer2_backend,
                             const DepthMap& d, const RgbImage& rgb, const Mask& m);

// Per-instance layered refinement merged per pixel by the candidate farthest from d.
// Ties go to the lowest instance id. Returns d when no instance covers min_fraction of the frame.
DepthMap refine_instances(const RefinerBackend& backend, const DepthMap& d, const RgbImage& rgb,
                          const InstanceMap& inst, double min_fraction = 0.01);
DepthMap refine_instances(const RefinerBackend& layer1_backend, const RefinerBackend& layer2_backend, const DepthMap& d,
                          const RgbImage& rgb, const InstanceMap& inst, double min_fraction = 0.01);

// Propagation baseline: the foreground is outpainted from erode(m, erode_k) and the
// background inpainted over dilate(m, dilate_k).
LayeredResult baseline_layered_propagation(const DepthMap& d, const RgbImage& rgb, const Mask& m, int dilate_k = 5,
                                           int erode_k = 5, int radius = 5);

// One backend pass with the mask as conditioning and no merge.
DepthMap direct_refine(const RefinerBackend& backend, const DepthMap& d, const RgbImage& rgb, const Mask& m);

}  // namespace depthlayers
