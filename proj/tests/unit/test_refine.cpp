#include <cmath>
#include <map>
#include <sstream>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "doctest.h"

#include "depthlayers/core/compose.hpp"
#include "depthlayers/datagen/masks.hpp"
#include "depthlayers/refine/refine.hpp"
#include "support/generators.hpp"

using namespace depthlayers;
using depthlayers::testing::random_binary_mask;
using depthlayers::testing::random_depth;
using depthlayers::testing::random_rgb;
using depthlayers::testing::square_mask;

namespace {

// Deterministic backend whose output depends on the mask, so layer 1 and layer 2 differ.
class MaskHashBackend final : public RefinerBackend {
 public:
  DepthMap refine_layer(const DepthMap& d, const RgbImage&, const Mask& m) const override {
    Rng rng(m.on_count() * 7919 + (m.on(0) ? 1 : 0));
    DepthMap out = d;
    for (std::size_t i = 0; i < out.count(); ++i) out[i] += rng.uniform(-0.5, 0.5);
    return out;
  }
  std::string name() const override { return "mask-hash"; }
};

// Fills the whole map with a constant chosen by the mask's on-count.
class TableBackend final : public RefinerBackend {
 public:
  explicit TableBackend(std::map<std::size_t, double> table) : table_(std::move(table)) {}
  DepthMap refine_layer(const DepthMap& d, const RgbImage&, const Mask& m) const override {
    return DepthMap(d.width(), d.height(), table_.at(m.on_count()));
  }
  std::string name() const override { return "table"; }

 private:
  std::map<std::size_t, double> table_;
};

class FailOnInverse final : public RefinerBackend {
 public:
  DepthMap refine_layer(const DepthMap& d, const RgbImage&, const Mask& m) const override {
    if (!m.on(0)) throw NumericError("diverged");
    return d;
  }
  std::string name() const override { return "fail"; }
};

DepthMap two_plane(const Mask& m, double fg, double bg) {
  return composite(DepthMap(m.width(), m.height(), fg), DepthMap(m.width(), m.height(), bg), m);
}

InstanceMap halves(int w, int h, int split) {
  InstanceMap inst(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) inst(x, y) = x < split ? 1 : 2;
  return inst;
}

}  // namespace

TEST_CASE("identity backend leaves every layer equal to the input") {
  Rng rng(1);
  const DepthMap d = random_depth({12, 9}, rng);
  const RgbImage rgb = random_rgb({12, 9}, rng);
  const Mask m = random_binary_mask({12, 9}, rng);
  const auto r = refine_layered(IdentityBackend{}, d, rgb, m);
  CHECK(r.layer1 == d);
  CHECK(r.layer2 == d);
  CHECK(r.merged == d);
  CHECK(direct_refine(IdentityBackend{}, d, rgb, m) == d);
}

TEST_CASE("merged equals merge_layers and layer 1 on the mask") {
  for (int s = 0; s < 20; ++s) {
    Rng rng(100 + s);
    const Size size{16, 16};
    const DepthMap d = random_depth(size, rng);
    const RgbImage rgb = random_rgb(size, rng);
    const Mask m = random_binary_mask(size, rng, 0.4);
    const auto r = refine_layered(MaskHashBackend{}, d, rgb, m);
    CHECK(r.merged == merge_layers(r.layer1, r.layer2, m));
    for (std::size_t i = 0; i < d.count(); ++i) {
      if (m.on(i)) CHECK(r.merged[i] == r.layer1[i]);
      else CHECK(r.merged[i] == r.layer2[i]);
    }
    CHECK(direct_refine(MaskHashBackend{}, d, rgb, m) == r.layer1);
  }
}

TEST_CASE("constant input stays constant under propagation") {
  const Size size{20, 20};
  Rng rng(2);
  const Mask m = synthesize_mask(MaskCategory::object, size, rng);
  const auto r = refine_layered(PropagationBackend{}, DepthMap(20, 20, 4.25), random_rgb(size, rng), m);
  for (double v : r.merged.values().data()) CHECK(std::abs(v - 4.25) < 1e-12);
}

TEST_CASE("propagation on a two-plane composite keeps the edge on the mask") {
  const Size size{32, 32};
  const Mask m = square_mask(size, 9, 11, 12);
  const DepthMap d = two_plane(m, 8.0, 2.0);
  Rng rng(3);
  const RgbImage rgb = random_rgb(size, rng);
  for (const auto& r : {refine_layered(PropagationBackend{}, d, rgb, m), baseline_layered_propagation(d, rgb, m)}) {
    std::size_t transition = 0;
    for (std::size_t i = 0; i < d.count(); ++i) {
      const double want = m.on(i) ? 8.0 : 2.0;
      if (std::abs(r.merged[i] - want) > 1e-9) ++transition;
    }
    CHECK(transition == 0);
  }
}

TEST_CASE("baseline with an all-ones mask returns the input") {
  Rng rng(4);
  const DepthMap d = random_depth({10, 10}, rng);
  const auto r = baseline_layered_propagation(d, random_rgb({10, 10}, rng), Mask(10, 10, 1.0));
  CHECK(r.layer1 == d);
  CHECK(r.merged == d);
}

TEST_CASE("baseline falls back to a 3x3 erosion with a warning") {
  std::ostringstream log;
  auto logger = std::make_shared<spdlog::logger>("capture", std::make_shared<spdlog::sinks::ostream_sink_mt>(log));
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);

  const Size size{16, 16};
  const Mask m = square_mask(size, 6, 6, 4);  // 5x5 erosion erases it, 3x3 leaves 2x2
  const DepthMap d = two_plane(m, 7.0, 1.0);
  Rng rng(5);
  const auto r = baseline_layered_propagation(d, random_rgb(size, rng), m);
  spdlog::set_default_logger(previous);

  CHECK(log.str().find("retrying with 3x3") != std::string::npos);
  for (std::size_t i = 0; i < d.count(); ++i) CHECK(std::isfinite(r.merged[i]));
  CHECK(r.merged(7, 7) == 7.0);
}

TEST_CASE("backend failures carry the layer identity") {
  const Mask m = square_mask({6, 6}, 0, 0, 3);
  try {
    refine_layered(FailOnInverse{}, DepthMap(6, 6, 1.0), RgbImage(6, 6), m);
    FAIL("expected LayerError");
  } catch (const LayerError& e) {
    CHECK(e.layer() == 2);
    CHECK(e.kind() == ErrorKind::numeric);
  }
}

TEST_CASE("refine_instances picks the candidate farthest from the input") {
  const DepthMap d(10, 10, 0.5);
  const RgbImage rgb(10, 10);
  // Columns 0-2 are instance a (30 px), columns 3-4 instance b (20 px), the rest background.
  auto layout = [](std::uint32_t a, std::uint32_t b) {
    InstanceMap inst(10, 10, 0);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 5; ++x) inst(x, y) = x < 3 ? a : b;
    return inst;
  };
  // Each instance's layered result is constant: 0.6 for the 30 px instance, 0.45 for the 20 px one.
  const TableBackend far({{30, 0.6}, {70, 0.6}, {20, 0.45}, {80, 0.45}});
  for (const auto& inst : {layout(1, 2), layout(2, 1)}) {
    const DepthMap picked = refine_instances(far, d, rgb, inst);
    for (std::size_t i = 0; i < d.count(); ++i) CHECK(picked[i] == 0.6);
  }

  const TableBackend tie({{30, 0.6}, {70, 0.6}, {20, 0.4}, {80, 0.4}});
  REQUIRE(std::abs(0.5 - 0.6) == std::abs(0.5 - 0.4));
  const DepthMap low_first = refine_instances(tie, d, rgb, layout(1, 2));
  const DepthMap high_first = refine_instances(tie, d, rgb, layout(2, 1));
  for (std::size_t i = 0; i < d.count(); ++i) {
    CHECK(low_first[i] == 0.6);
    CHECK(high_first[i] == 0.4);
  }
}

TEST_CASE("refine_instances trivial cases") {
  Rng rng(6);
  const DepthMap d = random_depth({12, 12}, rng);
  const RgbImage rgb = random_rgb({12, 12}, rng);
  CHECK(refine_instances(MaskHashBackend{}, d, rgb, InstanceMap(12, 12, 0)) == d);
  CHECK(refine_instances(IdentityBackend{}, d, rgb, halves(12, 12, 5)) == d);

  InstanceMap single(12, 12, 0);
  for (int y = 2; y < 8; ++y)
    for (int x = 3; x < 9; ++x) single(x, y) = 4;
  std::vector<std::uint8_t> on(single.count());
  for (std::size_t i = 0; i < on.size(); ++i) on[i] = single[i] == 4;
  const auto merged = refine_layered(MaskHashBackend{}, d, rgb, Mask::from_predicate({12, 12}, on)).merged;
  CHECK(refine_instances(MaskHashBackend{}, d, rgb, single) == merged);
}

TEST_CASE("refine_instances output is always one of the candidates") {
  for (int s = 0; s < 20; ++s) {
    Rng rng(700 + s);
    const Size size{14, 14};
    const DepthMap d = random_depth(size, rng);
    const RgbImage rgb = random_rgb(size, rng);
    InstanceMap inst(14, 14, 0);
    for (auto& v : inst.data()) v = static_cast<std::uint32_t>(rng.uniform_int(0, 3));
    std::vector<DepthMap> candidates;
    for (std::uint32_t id = 1; id <= 3; ++id) {
      std::vector<std::uint8_t> on(inst.count());
      for (std::size_t i = 0; i < on.size(); ++i) on[i] = inst[i] == id;
      if (std::count(on.begin(), on.end(), 1) == 0) continue;
      candidates.push_back(refine_layered(MaskHashBackend{}, d, rgb, Mask::from_predicate(size, on)).merged);
    }
    const DepthMap out = refine_instances(MaskHashBackend{}, d, rgb, inst);
    for (std::size_t i = 0; i < d.count(); ++i) {
      bool found = out[i] == d[i];
      double best = 0.0;
      for (const auto& c : candidates) {
        found = found || out[i] == c[i];
        best = std::max(best, std::abs(d[i] - c[i]));
      }
      CHECK(found);
      CHECK(std::abs(d[i] - out[i]) == best);
    }
  }
}
