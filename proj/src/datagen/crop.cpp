#include "depthlayers/datagen/crop.hpp"

#include <algorithm>
#include <map>

namespace depthlayers {

BoundingBox instance_bbox(const InstanceMap& inst, std::uint32_t id) {
  BoundingBox b{inst.width(), inst.height(), -1, -1};
  for (int y = 0; y < inst.height(); ++y) {
    for (int x = 0; x < inst.width(); ++x) {
      if (inst(x, y) != id) continue;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
    }
  }
  return b;
}

std::vector<std::uint32_t> qualifying_instances(const InstanceMap& inst, double min_fraction) {
  std::map<std::uint32_t, std::size_t> counts;
  for (std::uint32_t id : inst.data())
    if (id != 0) ++counts[id];
  const double total = static_cast<double>(inst.count());
  std::vector<std::uint32_t> ids;
  for (const auto& [id, n] : counts)
    if (static_cast<double>(n) >= min_fraction * total) ids.push_back(id);
  return ids;
}

namespace {

// Uniform origin on one axis such that [o, o+p) lies in [0, extent) and covers [lo, hi].
int place(int lo, int hi, int p, int extent, Rng& rng) {
  const int min_o = std::max(0, hi - p + 1);
  const int max_o = std::min(lo, extent - p);
  return static_cast<int>(rng.uniform_int(min_o, std::max(min_o, max_o)));
}

}  // namespace

CropSpec sample_crop(const InstanceMap& inst, int patch, bool stuff, Rng& rng, double min_fraction) {
  if (inst.empty()) throw InvalidArgument("sample_crop: empty instance map");
  if (patch <= 0) throw InvalidArgument("sample_crop: patch must be positive");
  const int frame = std::min(inst.width(), inst.height());

  std::vector<std::uint32_t> ids = qualifying_instances(inst, min_fraction);
  if (!stuff) {
    // A square window can only contain boxes no larger than the shorter frame edge.
    std::erase_if(ids, [&](std::uint32_t id) {
      const BoundingBox b = instance_bbox(inst, id);
      return std::max(b.width(), b.height()) > frame;
    });
  }
  if (ids.empty()) throw NoQualifyingInstance();

  CropSpec spec;
  spec.resized_to = patch;
  spec.instance = ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(ids.size()) - 1))];

  if (stuff) {
    const int h = inst.height();
    const int p = std::min(frame, static_cast<int>(rng.uniform_int(h / 2, h)));
    const int ox = static_cast<int>(rng.uniform_int(0, inst.width() - p));
    const int oy = static_cast<int>(rng.uniform_int(0, inst.height() - p));
    spec.window = Rect{ox, oy, p, p};
    return spec;
  }

  const BoundingBox b = instance_bbox(inst, spec.instance);
  const int s = std::max(b.width(), b.height());
  int p = 0;
  if (s <= patch) {
    p = std::min(patch, frame);
  } else {
    p = std::min(frame, static_cast<int>(rng.uniform_int(s, 2 * s)));
  }
  const int ox = place(b.x0, b.x1, p, inst.width(), rng);
  const int oy = place(b.y0, b.y1, p, inst.height(), rng);
  spec.window = Rect{ox, oy, p, p};
  return spec;
}

}  // namespace depthlayers
