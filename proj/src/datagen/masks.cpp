#include "depthlayers/datagen/masks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "depthlayers/datagen/holes.hpp"
#include "depthlayers/datagen/morphology.hpp"

namespace depthlayers {

const char* to_string(MaskCategory c) {
  switch (c) {
    case MaskCategory::object: return "object";
    case MaskCategory::sky: return "sky";
    case MaskCategory::human: return "human";
    case MaskCategory::human_with_holes: return "human_with_holes";
  }
  return "object";
}

MaskCategory parse_mask_category(const std::string& s) {
  if (s == "object") return MaskCategory::object;
  if (s == "sky") return MaskCategory::sky;
  if (s == "human") return MaskCategory::human;
  if (s == "human_with_holes" || s == "human-with-holes") return MaskCategory::human_with_holes;
  throw InvalidArgument("unknown mask kind '" + s + "'");
}

MaskCategory MaskMix::draw(Rng& rng) const {
  const double total = object + sky + human;
  const double u = rng.uniform() * total;
  const bool hole = rng.bernoulli(human_hole_fraction);
  if (u < object) return MaskCategory::object;
  if (u < object + sky) return MaskCategory::sky;
  return hole ? MaskCategory::human_with_holes : MaskCategory::human;
}

void MaskMix::validate() const {
  if (object < 0 || sky < 0 || human < 0 || object + sky + human <= 0) throw InvalidArgument("mask mix weights must be non-negative");
  if (human_hole_fraction < 0 || human_hole_fraction > 1) throw InvalidArgument("human hole fraction must lie in [0,1]");
}

namespace {

constexpr double kPi = std::numbers::pi;

using Bits = std::vector<std::uint8_t>;

Bits blob(Size size, Rng& rng) {
  const double w = size.width;
  const double h = size.height;
  const double cx = rng.uniform(0.3, 0.7) * w;
  const double cy = rng.uniform(0.3, 0.7) * h;
  const double r0 = rng.uniform(0.15, 0.38) * std::min(w, h);
  double amp[4];
  double phase[4];
  for (int k = 0; k < 4; ++k) {
    amp[k] = rng.uniform(0.0, 0.3 / (k + 1));
    phase[k] = rng.uniform(0.0, 2.0 * kPi);
  }
  Bits on(size.area(), 0);
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      const double theta = std::atan2(dy, dx);
      double r = 1.0;
      for (int k = 0; k < 4; ++k) r += amp[k] * std::cos((k + 2) * theta + phase[k]);
      on[static_cast<std::size_t>(y) * size.width + x] = std::hypot(dx, dy) <= r0 * r ? 1 : 0;
    }
  }
  return on;
}

Bits sky(Size size, Rng& rng) {
  const double h = size.height;
  const double base = rng.uniform(0.2, 0.6) * h;
  double amp[3];
  double freq[3];
  double phase[3];
  for (int k = 0; k < 3; ++k) {
    amp[k] = rng.uniform(0.0, 0.05) * h;
    freq[k] = rng.uniform(0.5, 2.0) * (k + 1);
    phase[k] = rng.uniform(0.0, 2.0 * kPi);
  }
  Bits on(size.area(), 0);
  for (int x = 0; x < size.width; ++x) {
    double horizon = base;
    for (int k = 0; k < 3; ++k) horizon += amp[k] * std::sin(2.0 * kPi * freq[k] * x / size.width + phase[k]);
    for (int y = 0; y < size.height; ++y) on[static_cast<std::size_t>(y) * size.width + x] = (y + 0.5) < horizon ? 1 : 0;
  }
  return on;
}

struct Ellipse {
  double cx, cy, a, b, angle;
  bool contains(double x, double y) const {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double u = (x - cx) * c + (y - cy) * s;
    const double v = -(x - cx) * s + (y - cy) * c;
    return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
  }
};

Bits body(Size size, Rng& rng) {
  const double w = size.width;
  const double h = size.height;
  const double cx = rng.uniform(0.35, 0.65) * w;
  const double torso_cy = rng.uniform(0.5, 0.62) * h;
  const double torso_a = std::max(1.5, rng.uniform(0.1, 0.17) * w);
  const double torso_b = std::max(2.0, rng.uniform(0.2, 0.28) * h);
  const double head_r = std::max(1.0, rng.uniform(0.06, 0.09) * std::min(w, h));
  const double arm_a = std::max(1.0, rng.uniform(0.025, 0.045) * w);
  const double arm_b = std::max(2.0, rng.uniform(0.15, 0.22) * h);
  const double arm_tilt = rng.uniform(0.1, 0.5);
  const double leg_a = std::max(1.0, rng.uniform(0.04, 0.06) * w);

  std::vector<Ellipse> parts;
  parts.push_back({cx, torso_cy, torso_a, torso_b, 0.0});
  parts.push_back({cx, torso_cy - torso_b - 0.7 * head_r, head_r, head_r, 0.0});
  parts.push_back({cx - torso_a - arm_a, torso_cy - 0.1 * torso_b, arm_a, arm_b, arm_tilt});
  parts.push_back({cx + torso_a + arm_a, torso_cy - 0.1 * torso_b, arm_a, arm_b, -arm_tilt});
  parts.push_back({cx - 0.5 * torso_a, torso_cy + torso_b, leg_a, 0.6 * torso_b, 0.0});
  parts.push_back({cx + 0.5 * torso_a, torso_cy + torso_b, leg_a, 0.6 * torso_b, 0.0});

  Bits on(size.area(), 0);
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x)
      for (const Ellipse& e : parts)
        if (e.contains(x + 0.5, y + 0.5)) {
          on[static_cast<std::size_t>(y) * size.width + x] = 1;
          break;
        }
  return on;
}

// Cuts discs fully enclosed by foreground; returns false when nothing fits.
bool carve_holes(Bits& on, Size size, Rng& rng) {
  const int count = static_cast<int>(rng.uniform_int(1, 3));
  bool carved = false;
  for (int n = 0; n < count; ++n) {
    int radius = std::max(1, static_cast<int>(rng.uniform(0.03, 0.07) * std::min(size.width, size.height)));
    for (; radius >= 0; --radius) {
      // Centres whose disc plus a one-pixel rim of foreground stays inside the mask.
      Raster<double> current(size.width, size.height);
      for (std::size_t i = 0; i < on.size(); ++i) current[i] = on[i];
      const Raster<double> core = erode(current, 2 * (radius + 1) + 1, 1, Border::zero);
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < on.size(); ++i)
        if (core[i] > 0.0) candidates.push_back(i);
      if (candidates.empty()) continue;
      const std::size_t c = candidates[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1))];
      const int ccx = static_cast<int>(c % size.width);
      const int ccy = static_cast<int>(c / size.width);
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
          if (dx * dx + dy * dy <= radius * radius)
            on[static_cast<std::size_t>(ccy + dy) * size.width + (ccx + dx)] = 0;
      carved = true;
      break;
    }
  }
  return carved;
}

double coverage(const Bits& on) {
  std::size_t n = 0;
  for (auto v : on) n += v;
  return on.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(on.size());
}

Bits disc_fallback(Size size) {
  // Centred disc at roughly 20% coverage.
  Bits on(size.area(), 0);
  const double r = std::sqrt(0.2 * size.width * size.height / kPi);
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x)
      on[static_cast<std::size_t>(y) * size.width + x] =
          std::hypot(x + 0.5 - size.width / 2.0, y + 0.5 - size.height / 2.0) <= r ? 1 : 0;
  return on;
}

}  // namespace

Mask synthesize_mask(MaskCategory kind, Size size, Rng& rng) {
  if (size.width < 8 || size.height < 8) throw InvalidArgument("synthesize_mask: size must be at least 8x8");
  constexpr int kAttempts = 64;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Bits on;
    switch (kind) {
      case MaskCategory::object: on = blob(size, rng); break;
      case MaskCategory::sky: on = sky(size, rng); break;
      case MaskCategory::human: on = body(size, rng); break;
      case MaskCategory::human_with_holes:
        on = body(size, rng);
        if (!carve_holes(on, size, rng)) continue;
        break;
    }
    const double cov = coverage(on);
    if (cov < kMinMaskCoverage || cov > kMaxMaskCoverage) continue;
    Mask m = Mask::from_predicate(size, on);
    if (kind == MaskCategory::human_with_holes && find_holes(m).empty()) continue;
    return m;
  }
  // Unreachable for reasonable sizes; keeps the coverage contract regardless.
  Bits on = disc_fallback(size);
  if (kind == MaskCategory::human_with_holes) {
    const int cx = size.width / 2;
    const int cy = size.height / 2;
    on[static_cast<std::size_t>(cy) * size.width + cx] = 0;
  }
  return Mask::from_predicate(size, on);
}

}  // namespace depthlayers
