#pragma once

#include <cstdint>

#include "depthlayers/core/error.hpp"
#include "depthlayers/core/random.hpp"
#include "depthlayers/core/resample.hpp"

namespace depthlayers {

/// Square crop window chosen around a mask object, later resized to the training patch.
struct CropSpec {
  Rect window;          // square: window.width == window.height
  int resized_to = 0;   // training patch edge
  std::uint32_t instance = 0;
};

/// Raised when no instance covers enough pixels; callers resample another mask.
class NoQualifyingInstance : public DataError {
 public:
  NoQualifyingInstance() : DataError("no instance covers the minimum pixel fraction") {}
};

struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;
  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
};

BoundingBox instance_bbox(const InstanceMap& inst, std::uint32_t id);

/// Ids covering at least `min_fraction` of all pixels, ascending.
std::vector<std::uint32_t> qualifying_instances(const InstanceMap& inst, double min_fraction);

/// Picks a qualifying instance and a square window around it.
///
/// Objects whose box fits the patch get a patch-sized window containing the
/// whole box. Larger objects get an edge drawn from U(s, 2s), s = max box edge,
/// still containing the box. Stuff regions get U(H/2, H) at any position.
/// Windows are clamped to the frame.
CropSpec sample_crop(const InstanceMap& inst, int patch, bool stuff, Rng& rng, double min_fraction = 0.01);

}  // namespace depthlayers
