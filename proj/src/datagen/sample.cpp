#include "depthlayers/datagen/sample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "depthlayers/core/compose.hpp"
#include "depthlayers/core/resample.hpp"
#include "depthlayers/datagen/crop.hpp"
#include "depthlayers/datagen/holes.hpp"

namespace depthlayers {

namespace {

struct Plane {
  double offset, gx, gy;
  double color[3];
  double tex_fx, tex_fy, tex_phase;
};

Plane draw_plane(Size size, Rng& rng, const SceneOptions& o) {
  Plane p{};
  p.offset = rng.uniform(1.0, 9.0);
  p.gx = rng.uniform(-o.max_tilt, o.max_tilt) / std::max(1, size.width);
  p.gy = rng.uniform(-o.max_tilt, o.max_tilt) / std::max(1, size.height);
  for (double& c : p.color) c = rng.uniform(0.2, 0.8);
  p.tex_fx = rng.uniform(0.1, 0.6);
  p.tex_fy = rng.uniform(0.1, 0.6);
  p.tex_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return p;
}

}  // namespace

RgbdRecord synthetic_scene(Size size, Rng& rng, const SceneOptions& options) {
  if (options.planes < 1 || options.planes > 2) throw InvalidArgument("synthetic_scene supports 1 or 2 planes");
  Plane planes[2] = {draw_plane(size, rng, options), draw_plane(size, rng, options)};
  const double lx = rng.uniform(0.25, 0.75) * size.width;
  const double ly = rng.uniform(0.25, 0.75) * size.height;
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const double nx = std::cos(angle);
  const double ny = std::sin(angle);
  const double cx = size.width / 2.0;
  const double cy = size.height / 2.0;

  RgbdRecord rec{RgbImage(size.width, size.height), DepthMap(size.width, size.height)};
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      const int piece = (options.planes == 2 && (x + 0.5 - lx) * nx + (y + 0.5 - ly) * ny > 0.0) ? 1 : 0;
      const Plane& p = planes[piece];
      const double depth = std::clamp(p.offset + p.gx * (x - cx) + p.gy * (y - cy), 0.0, 10.0);
      rec.depth(x, y) = depth;
      const double shade = 0.15 * (depth / 10.0 - 0.5);
      const double tex = options.texture * std::sin(p.tex_fx * x + p.tex_fy * y + p.tex_phase);
      for (int c = 0; c < 3; ++c) rec.rgb(c, x, y) = std::clamp(p.color[c] + shade + tex, 0.0, 1.0);
    }
  }
  return rec;
}

TrainingSample generate_sample(const RgbdRecord& source_a, const RgbdRecord& source_b, const Mask& m,
                               const PerturbConfig& cfg, std::uint64_t seed, Size patch) {
  if (!m.is_binary()) throw InvalidArgument("training composition requires a binary mask");
  cfg.validate();
  TrainingSample s;
  s.seed = seed;
  s.perturb = cfg;
  s.mask = resize_nearest(m, patch);
  s.layer1 = resize_bilinear(source_a.depth, patch);
  s.layer2 = resize_bilinear(source_b.depth, patch);
  const RgbImage rgb1 = resize_bilinear(source_a.rgb, patch);
  const RgbImage rgb2 = resize_bilinear(source_b.rgb, patch);
  s.depth = composite(s.layer1, s.layer2, s.mask);
  s.rgb = composite(rgb1, rgb2, s.mask);
  Rng rng(seed);
  s.perturbed = perturb(s.depth, s.mask, cfg, rng);
  return s;
}

TrainingSample synthesize_training_sample(const GeneratorOptions& options, std::uint64_t master_seed,
                                          std::uint64_t index, std::span<const Mask> mask_pool) {
  options.mix.validate();
  Rng rng = Rng::derive(master_seed, index);
  MaskCategory category = MaskCategory::object;
  Mask full;
  if (mask_pool.empty()) {
    category = options.mix.draw(rng);
    const Size canvas{std::max(8, static_cast<int>(std::lround(options.patch.width * options.canvas_scale))),
                      std::max(8, static_cast<int>(std::lround(options.patch.height * options.canvas_scale)))};
    full = synthesize_mask(category, canvas, rng);
  } else {
    full = mask_pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(mask_pool.size()) - 1))];
    if (full.kind() != MaskKind::binary) throw InvalidArgument("pool masks must be binary");
  }
  const Size canvas = full.size();
  InstanceMap inst(canvas.width, canvas.height, 0u);
  for (std::size_t i = 0; i < full.count(); ++i) inst[i] = full.on(i) ? 1u : 0u;

  Mask mask = full;
  try {
    const CropSpec spec = sample_crop(inst, options.patch.width, category == MaskCategory::sky, rng,
                                      options.min_instance_fraction);
    mask = crop(full, spec.window);
  } catch (const NoQualifyingInstance&) {
    // keep the uncropped canvas
  }

  const RgbdRecord a = synthetic_scene(options.patch, rng, options.scene);
  const RgbdRecord b = synthetic_scene(options.patch, rng, options.scene);
  PerturbConfig cfg = options.perturb;
  const bool holed = mask_pool.empty() ? category == MaskCategory::human_with_holes : !find_holes(mask).empty();
  cfg.hole_perturb_prob = holed ? options.hole_prob_for_holed : 0.0;
  TrainingSample s = generate_sample(a, b, mask, cfg, rng.next(), options.patch);
  s.category = category;
  return s;
}

RgbImage augment_rgb(const RgbImage& rgb, bool /*enabled*/) { return rgb; }

}  // namespace depthlayers
