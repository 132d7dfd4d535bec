#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "depthlayers/completion/completion.hpp"
#include "depthlayers/datagen/masks.hpp"
#include "support/generators.hpp"

using namespace depthlayers;
using depthlayers::testing::random_depth;
using depthlayers::testing::random_rgb;
using depthlayers::testing::square_mask;

namespace {

// Exhaustive weighted median: smallest window value v with W(<= v) >= W/2.
double weighted_median_oracle(const DepthMap& d, const RgbImage& g, int x, int y, int window, double sigma) {
  const int r = window / 2;
  std::vector<double> vals, wts;
  for (int qy = y - r; qy <= y + r; ++qy)
    for (int qx = x - r; qx <= x + r; ++qx) {
      if (qx < 0 || qy < 0 || qx >= d.width() || qy >= d.height()) continue;
      double dist2 = 0;
      for (int c = 0; c < 3; ++c) dist2 += (g(c, qx, qy) - g(c, x, y)) * (g(c, qx, qy) - g(c, x, y));
      vals.push_back(d(qx, qy));
      wts.push_back(std::exp(-dist2 / (2 * sigma * sigma)));
    }
  double total = 0;
  for (double w : wts) total += w;
  double best = INFINITY;
  for (double v : vals) {
    double below = 0;
    for (std::size_t k = 0; k < vals.size(); ++k)
      if (vals[k] <= v) below += wts[k];
    if (below >= total / 2 && v < best) best = v;
  }
  return best;
}

}  // namespace

TEST_CASE("propagate_fill with an empty region is identity") {
  Rng rng(1);
  const DepthMap d = random_depth({8, 8}, rng);
  CHECK(propagate_fill(d, FillRegion{Mask(8, 8, 0.0)}) == d);
}

TEST_CASE("propagate_fill constant boundary fills the centre exactly") {
  DepthMap d(5, 5, 7.0);
  d(2, 2) = -100.0;
  const DepthMap out = propagate_fill(d, FillRegion{square_mask({5, 5}, 2, 2, 1)});
  CHECK(std::abs(out(2, 2) - 7.0) < 1e-6);
}

TEST_CASE("propagate_fill rejects an all-unknown region") {
  CHECK_THROWS_AS(propagate_fill(DepthMap(4, 4, 1.0), FillRegion{Mask(4, 4, 1.0)}), DataError);
}

TEST_CASE("propagate_fill keeps known pixels and stays inside the band envelope") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const Size size{static_cast<int>(rng.uniform_int(12, 40)), static_cast<int>(rng.uniform_int(12, 40))};
    const DepthMap d = random_depth(size, rng);
    const Mask unknown = synthesize_mask(seed % 2 ? MaskCategory::object : MaskCategory::human_with_holes, size, rng);
    const int radius = static_cast<int>(rng.uniform_int(1, 6));
    const FillRegion region{unknown};
    const DepthMap out = propagate_fill(d, region, radius);

    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i : region.boundary_band(radius)) {
      lo = std::min(lo, d[i]);
      hi = std::max(hi, d[i]);
    }
    for (std::size_t i = 0; i < d.count(); ++i) {
      CHECK(std::isfinite(out[i]));
      if (!unknown.on(i)) {
        CHECK(out[i] == d[i]);
      } else {
        CHECK(out[i] >= lo - 1e-12);
        CHECK(out[i] <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("propagate_fill treats invalid pixels as unknown") {
  DepthMap d(6, 6, 3.0);
  Raster<std::uint8_t> valid(6, 6, 1);
  valid(1, 1) = 0;
  d(1, 1) = 1e9;
  d.set_validity(valid);
  const DepthMap out = propagate_fill(d, FillRegion{Mask(6, 6, 0.0)});
  CHECK(out(1, 1) == doctest::Approx(3.0));
  CHECK_FALSE(out.has_validity());
}

TEST_CASE("propagate_fill continues a two-plane split across the gap") {
  // Left half 2.0, right half 8.0, a vertical unknown strip straddling the edge.
  DepthMap d(20, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 20; ++x) d(x, y) = x < 10 ? 2.0 : 8.0;
  std::vector<std::uint8_t> on(200, 0);
  for (int y = 0; y < 10; ++y)
    for (int x = 8; x < 12; ++x) on[static_cast<std::size_t>(y * 20 + x)] = 1;
  const DepthMap out = propagate_fill(d, FillRegion{Mask::from_predicate({20, 10}, on)}, 3);
  for (int y = 0; y < 10; ++y) {
    CHECK(out(8, y) < 5.0);
    CHECK(out(11, y) > 5.0);
  }
}

TEST_CASE("bilateral_median trivial cases") {
  Rng rng(2);
  const RgbImage g = random_rgb({9, 9}, rng);
  const DepthMap d = random_depth({9, 9}, rng);
  CHECK(bilateral_median(d, g, 1, 0.1) == d);
  CHECK(bilateral_median(DepthMap(9, 9, 4.0), g, 5, 0.1) == DepthMap(9, 9, 4.0));
  CHECK_THROWS_AS(bilateral_median(d, g, 4, 0.1), InvalidArgument);
}

TEST_CASE("bilateral_median matches the exhaustive weighted-median oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const RgbImage g = random_rgb({9, 9}, rng);
    const DepthMap d = random_depth({9, 9}, rng);
    const int window = 2 * static_cast<int>(rng.uniform_int(1, 4)) + 1;
    const double sigma = rng.uniform(0.05, 0.5);
    const DepthMap out = bilateral_median(d, g, window, sigma);
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) {
        CHECK(out(x, y) == weighted_median_oracle(d, g, x, y, window, sigma));
        // Output is a member of the input window.
        bool member = false;
        for (int qy = std::max(0, y - window / 2); qy <= std::min(8, y + window / 2); ++qy)
          for (int qx = std::max(0, x - window / 2); qx <= std::min(8, x + window / 2); ++qx)
            member = member || d(qx, qy) == out(x, y);
        CHECK(member);
      }
  }
}

TEST_CASE("bilateral_median preserves a colour-aligned step") {
  RgbImage g(12, 6, 0.0);
  DepthMap d(12, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 12; ++x) {
      for (int c = 0; c < 3; ++c) g(c, x, y) = x < 6 ? 0.1 : 0.9;
      d(x, y) = x < 6 ? 1.0 : 9.0;
    }
  CHECK(bilateral_median(d, g, 7, 0.1) == d);
}
