#pragma once

#include <string>

#include "depthlayers/core/random.hpp"
#include "depthlayers/core/raster.hpp"

namespace depthlayers {

enum class MaskCategory { object, sky, human, human_with_holes };

const char* to_string(MaskCategory c);
MaskCategory parse_mask_category(const std::string& s);

inline constexpr double kMinMaskCoverage = 0.05;
inline constexpr double kMaxMaskCoverage = 0.80;

/// Procedural binary mask covering 5-80% of the frame.
///
/// object: star-shaped smooth blob; sky: region above a wavy horizon;
/// human: head/torso/arm ellipses; human_with_holes: the same body with
/// 1-3 enclosed background holes.
Mask synthesize_mask(MaskCategory kind, Size size, Rng& rng);

/// Category mix used when sampling masks automatically.
struct MaskMix {
  double object = 0.5;
  double sky = 0.2;
  double human = 0.3;
  double human_hole_fraction = 0.5;

  MaskCategory draw(Rng& rng) const;
  void validate() const;
  bool operator==(const MaskMix&) const = default;
};

}  // namespace depthlayers
