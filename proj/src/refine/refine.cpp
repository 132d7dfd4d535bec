#include "depthlayers/refine/refine.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "depthlayers/completion/completion.hpp"
#include "depthlayers/core/compose.hpp"
#include "depthlayers/datagen/crop.hpp"
#include "depthlayers/datagen/morphology.hpp"

namespace depthlayers {

namespace {

Mask binarized(const Mask& m) {
  if (m.is_binary()) return m;
  std::vector<std::uint8_t> on(m.count());
  for (std::size_t i = 0; i < m.count(); ++i) on[i] = m.on(i);
  return Mask::from_predicate(m.size(), on);
}

void check_output(const DepthMap& out, Size expected, const std::string& backend) {
  if (out.size() != expected) throw DimensionMismatch(backend + " backend changed the raster size");
  for (std::size_t i = 0; i < out.count(); ++i)
    if (out.is_valid(i) && !std::isfinite(out[i])) throw NumericError(backend + " backend produced a non-finite value");
}

DepthMap run_layer(int layer, const RefinerBackend& backend, const DepthMap& d, const RgbImage& rgb, const Mask& m) {
  try {
    DepthMap out = backend.refine_layer(d, rgb, m);
    check_output(out, d.size(), backend.name());
    return out;
  } catch (const Error& e) {
    throw LayerError(layer, e.kind(), "layer " + std::to_string(layer) + ": " + e.what());
  } catch (const std::exception& e) {
    throw LayerError(layer, ErrorKind::numeric, "layer " + std::to_string(layer) + ": " + e.what());
  }
}

}  // namespace

DepthMap IdentityBackend::refine_layer(const DepthMap& perturbed, const RgbImage& rgb, const Mask& mask) const {
  require_same_size(perturbed.size(), rgb.size(), "identity backend");
  require_same_size(perturbed.size(), mask.size(), "identity backend");
  return perturbed;
}

PropagationBackend::PropagationBackend(int erode_kernel, int radius) : erode_kernel_(erode_kernel), radius_(radius) {
  if (erode_kernel < 1 || erode_kernel % 2 == 0) throw InvalidArgument("propagation erode kernel must be odd and positive");
  if (radius < 1) throw InvalidArgument("propagation radius must be positive");
}

DepthMap PropagationBackend::refine_layer(const DepthMap& perturbed, const RgbImage& rgb, const Mask& mask) const {
  require_same_size(perturbed.size(), rgb.size(), "propagation backend");
  require_same_size(perturbed.size(), mask.size(), "propagation backend");
  const Mask m = binarized(mask);
  if (m.on_count() == 0) return perturbed;

  Mask known = erode(m, erode_kernel_);
  if (known.on_count() == 0 && erode_kernel_ > 3) {
    spdlog::warn("erosion with a {}x{} kernel erased the mask; retrying with 3x3", erode_kernel_, erode_kernel_);
    known = erode(m, 3);
  }
  if (known.on_count() == 0) {
    spdlog::warn("erosion erased the mask; propagating from the mask itself");
    known = m;
  }
  return propagate_fill(perturbed, FillRegion{known.inverse()}, radius_);
}

LayerError::LayerError(int layer, ErrorKind kind, const std::string& what) : Error(kind, what), layer_(layer) {}

LayeredResult refine_layered(const RefinerBackend& layer1_backend, const RefinerBackend& layer2_backend,
                             const DepthMap& d, const RgbImage& rgb, const Mask& m) {
  require_same_size(d.size(), rgb.size(), "refine_layered");
  require_same_size(d.size(), m.size(), "refine_layered");
  const Mask hard = binarized(m);
  LayeredResult r{run_layer(1, layer1_backend, d, rgb, hard), run_layer(2, layer2_backend, d, rgb, hard.inverse()),
                  DepthMap{}};
  r.merged = merge_layers(r.layer1, r.layer2, m);
  return r;
}

LayeredResult refine_layered(const RefinerBackend& backend, const DepthMap& d, const RgbImage& rgb, const Mask& m) {
  return refine_layered(backend, backend, d, rgb, m);
}

DepthMap refine_instances(const RefinerBackend& backend, const DepthMap& d, const RgbImage& rgb,
                          const InstanceMap& inst, double min_fraction) {
  return refine_instances(backend, backend, d, rgb, inst, min_fraction);
}

DepthMap refine_instances(const RefinerBackend& layer1_backend, const RefinerBackend& layer2_backend, const DepthMap& d,
                          const RgbImage& rgb, const InstanceMap& inst, double min_fraction) {
  require_same_size(d.size(), inst.size(), "refine_instances");
  const auto ids = qualifying_instances(inst, min_fraction);
  if (ids.empty()) return d;

  DepthMap out = d;
  std::vector<double> best(d.count(), -1.0);
  for (std::uint32_t id : ids) {
    std::vector<std::uint8_t> on(inst.count());
    for (std::size_t i = 0; i < inst.count(); ++i) on[i] = inst[i] == id;
    const DepthMap merged =
        refine_layered(layer1_backend, layer2_backend, d, rgb, Mask::from_predicate(inst.size(), on)).merged;
    for (std::size_t i = 0; i < d.count(); ++i) {
      const double dist = std::abs(d[i] - merged[i]);
      if (dist > best[i]) {
        best[i] = dist;
        out[i] = merged[i];
      }
    }
  }
  return out;
}

LayeredResult baseline_layered_propagation(const DepthMap& d, const RgbImage& rgb, const Mask& m, int dilate_k,
                                           int erode_k, int radius) {
  if (!m.is_binary()) throw InvalidArgument("baseline_layered_propagation requires a binary mask");
  // Eroding 1 - m by k is dilating m by k, so layer 2 is inpainted over dilate(m).
  return refine_layered(PropagationBackend(erode_k, radius), PropagationBackend(dilate_k, radius), d, rgb, m);
}

DepthMap direct_refine(const RefinerBackend& backend, const DepthMap& d, const RgbImage& rgb, const Mask& m) {
  require_same_size(d.size(), rgb.size(), "direct_refine");
  require_same_size(d.size(), m.size(), "direct_refine");
  return run_layer(1, backend, d, rgb, binarized(m));
}

}  // namespace depthlayers
