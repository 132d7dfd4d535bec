#include "depthlayers/datagen/perturb.hpp"

#include <algorithm>

#include "depthlayers/datagen/blur.hpp"
#include "depthlayers/datagen/holes.hpp"
#include "depthlayers/datagen/morphology.hpp"

namespace depthlayers {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void PerturbConfig::validate() const {
  if (morph_iters.lo < 0 || morph_iters.hi < morph_iters.lo) throw InvalidArgument("perturb: bad morphology iteration interval");
  if (morph_kernel < 3 || morph_kernel % 2 == 0) throw InvalidArgument("perturb: morphology kernel must be odd and >= 3");
  for (const Interval& iv : {blur_small_sigma, blur_large_sigma}) {
    if (iv.lo < 0.0 || iv.hi < iv.lo) throw InvalidArgument("perturb: bad blur sigma interval");
  }
  if (!is_probability(blur_small_prob) || !is_probability(order_scheme_prob) || !is_probability(hole_perturb_prob)) {
    throw InvalidArgument("perturb: probabilities must lie in [0,1]");
  }
  if (hole_ring_width < 1) throw InvalidArgument("perturb: hole ring width must be positive");
}

MorphPlan draw_morph_plan(const PerturbConfig& cfg, Rng& rng) {
  MorphPlan plan;
  plan.dilate_iters = static_cast<int>(rng.uniform_int(cfg.morph_iters.lo, cfg.morph_iters.hi));
  plan.erode_iters = static_cast<int>(rng.uniform_int(cfg.morph_iters.lo, cfg.morph_iters.hi));
  plan.dilate_first = rng.bernoulli(cfg.order_scheme_prob);
  return plan;
}

DepthMap apply_morph_plan(const DepthMap& d, const MorphPlan& plan, int kernel) {
  if (plan.dilate_first) {
    DepthMap cur = dilate(d, kernel, plan.dilate_iters);
    cur = erode(cur, kernel, plan.erode_iters);
    cur = erode(cur, kernel, plan.erode_iters);
    return dilate(cur, kernel, plan.dilate_iters);
  }
  DepthMap cur = erode(d, kernel, plan.erode_iters);
  cur = dilate(cur, kernel, plan.dilate_iters);
  cur = dilate(cur, kernel, plan.dilate_iters);
  return erode(cur, kernel, plan.erode_iters);
}

DepthMap random_morph(const DepthMap& d, const PerturbConfig& cfg, Rng& rng) {
  cfg.validate();
  return apply_morph_plan(d, draw_morph_plan(cfg, rng), cfg.morph_kernel);
}

DepthMap hole_perturb(const DepthMap& d, const Mask& m, const PerturbConfig& cfg, Rng& rng) {
  require_same_size(d.size(), m.size(), "hole_perturb");
  DepthMap out = d;
  for (const Hole& hole : find_holes(m)) {
    const HoleStats s = hole_stats(d, hole, cfg.hole_ring_width);
    const double lo = std::min(s.mean_inside, s.mean_ring);
    const double hi = std::max(s.mean_inside, s.mean_ring);
    const double draw = rng.uniform(lo, hi);
    const double v = lo == hi ? lo : std::clamp(draw, lo, hi);
    for (std::size_t i : hole) out[i] = v;
  }
  return out;
}

DepthMap perturb(const DepthMap& d, const Mask& m, const PerturbConfig& cfg, Rng& rng) {
  cfg.validate();
  require_same_size(d.size(), m.size(), "perturb");
  DepthMap cur = random_morph(d, cfg, rng);
  const Interval& iv = rng.bernoulli(cfg.blur_small_prob) ? cfg.blur_small_sigma : cfg.blur_large_sigma;
  cur = gaussian_blur(cur, rng.uniform(iv.lo, iv.hi));
  if (rng.bernoulli(cfg.hole_perturb_prob)) cur = hole_perturb(cur, m, cfg, rng);
  return cur;
}

}  // namespace depthlayers
