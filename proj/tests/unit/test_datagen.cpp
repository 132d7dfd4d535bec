#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <set>

#include "doctest.h"

#include "depthlayers/core/compose.hpp"
#include "depthlayers/datagen/blur.hpp"
#include "depthlayers/datagen/crop.hpp"
#include "depthlayers/datagen/holes.hpp"
#include "depthlayers/datagen/morphology.hpp"
#include "depthlayers/datagen/perturb.hpp"
#include "depthlayers/datagen/sample.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace depthlayers;
using depthlayers::testing::mask_from_rows;
using depthlayers::testing::random_binary_mask;
using depthlayers::testing::random_depth;
using namespace depthlayers::testing;

TEST_CASE("dilate and erode leave constant maps unchanged") {
  const DepthMap c(6, 5, 3.5);
  CHECK(dilate(c, 3, 4) == c);
  CHECK(erode(c, 5, 2) == c);
}

TEST_CASE("dilating a single spike yields a 3x3 block") {
  DepthMap d(8, 8, 0.0);
  d(3, 3) = 1.0;
  const DepthMap out = dilate(d, 3, 1);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) CHECK(out(x, y) == ((std::abs(x - 3) <= 1 && std::abs(y - 3) <= 1) ? 1.0 : 0.0));
}

TEST_CASE("morphology matches sliding-window oracle bit-exactly") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const Size size{static_cast<int>(rng.uniform_int(1, 17)), static_cast<int>(rng.uniform_int(1, 17))};
    const DepthMap d = random_depth(size, rng);
    const int k = 2 * static_cast<int>(rng.uniform_int(0, 3)) + 1;
    const int iters = static_cast<int>(rng.uniform_int(0, 3));
    CHECK(dilate(d, k, iters).values() == window_oracle_iter(d.values(), k, iters, true));
    CHECK(erode(d, k, iters).values() == window_oracle_iter(d.values(), k, iters, false));
  }
}

TEST_CASE("erode is the dual of dilate") {
  Rng rng(8);
  const DepthMap d = random_depth({12, 9}, rng);
  DepthMap neg = d;
  for (std::size_t i = 0; i < neg.count(); ++i) neg[i] = -d[i];
  const DepthMap e = erode(d, 3, 2);
  const DepthMap nd = dilate(neg, 3, 2);
  for (std::size_t i = 0; i < d.count(); ++i) CHECK(e[i] == -nd[i]);
}

TEST_CASE("even morphology kernels are rejected") {
  CHECK_THROWS_AS(dilate(DepthMap(4, 4), 4, 1), InvalidArgument);
  CHECK_THROWS_AS(erode(DepthMap(4, 4), 2, 1), InvalidArgument);
  CHECK_THROWS_AS(degrade_mask(Mask(4, 4, 1.0), MaskDegradation::opening, 4), InvalidArgument);
}

TEST_CASE("random_morph is deterministic and fixes constants") {
  Rng data(1);
  const DepthMap d = random_depth({16, 16}, data);
  PerturbConfig cfg;
  Rng a(42), b(42);
  CHECK(random_morph(d, cfg, a) == random_morph(d, cfg, b));
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng r(s);
    CHECK(random_morph(DepthMap(9, 9, 2.0), cfg, r) == DepthMap(9, 9, 2.0));
  }
}

TEST_CASE("random_morph replays the composed dilate-erode schedule") {
  PerturbConfig cfg;
  std::uint64_t seed = 0;
  for (;; ++seed) {
    Rng probe(seed);
    const MorphPlan plan = draw_morph_plan(cfg, probe);
    if (plan.dilate_iters == 2 && plan.erode_iters == 1 && plan.dilate_first) break;
  }
  Rng data(5);
  const DepthMap d = random_depth({20, 20}, data);
  // dilate x2, erode x1, erode x1, dilate x2 composed by hand from the oracle.
  Raster<double> expected = window_oracle_iter(d.values(), 3, 2, true);
  expected = window_oracle_iter(expected, 3, 1, false);
  expected = window_oracle_iter(expected, 3, 1, false);
  expected = window_oracle_iter(expected, 3, 2, true);
  Rng rng(seed);
  CHECK(random_morph(d, cfg, rng).values() == expected);
}

TEST_CASE("gaussian blur identity, constants and errors") {
  Rng rng(2);
  const DepthMap d = random_depth({10, 10}, rng);
  CHECK(gaussian_blur(d, 0.0) == d);
  for (double sigma : {0.3, 1.0, 4.5}) {
    const DepthMap out = gaussian_blur(DepthMap(12, 7, 6.5), sigma);
    for (std::size_t i = 0; i < out.count(); ++i) CHECK(out[i] == doctest::Approx(6.5).epsilon(1e-14));
  }
  CHECK_THROWS_AS(gaussian_blur(d, -0.1), InvalidArgument);
}

TEST_CASE("gaussian kernel matches the analytic normalised taps") {
  for (double sigma : {0.5, 1.0, 2.0, 5.0}) {
    const auto taps = gaussian_kernel(sigma);
    const int radius = static_cast<int>(std::ceil(3 * sigma));
    REQUIRE(taps.size() == static_cast<std::size_t>(2 * radius + 1));
    long double total = 0;
    for (int i = -radius; i <= radius; ++i) total += std::exp(-static_cast<long double>(i * i) / (2.0L * sigma * sigma));
    for (int i = -radius; i <= radius; ++i) {
      const long double expected = std::exp(-static_cast<long double>(i * i) / (2.0L * sigma * sigma)) / total;
      CHECK(std::abs(static_cast<long double>(taps[static_cast<std::size_t>(i + radius)]) - expected) < 1e-9L);
    }
  }
}

TEST_CASE("find_holes trivial masks and donut") {
  CHECK(find_holes(Mask(7, 7, 1.0)).empty());
  CHECK(find_holes(Mask(7, 7, 0.0)).empty());
  const Mask donut = mask_from_rows({
      ".......",
      ".#####.",
      ".#...#.",
      ".#...#.",
      ".#####.",
      ".......",
  });
  const auto holes = find_holes(donut);
  REQUIRE(holes.size() == 1);
  CHECK(holes[0] == Hole{16, 17, 18, 23, 24, 25});
}

TEST_CASE("find_holes treats diagonal zero contact as separate") {
  // The interior zero touches the outside only diagonally: still a hole under 4-connectivity.
  const Mask m = mask_from_rows({
      "....",
      ".#..",
      "#.#.",
      ".#..",
  });
  const auto holes = find_holes(m);
  REQUIRE(holes.size() == 1);
  CHECK(holes[0] == Hole{9});
}

TEST_CASE("find_holes rejects soft masks") {
  Raster<double> alpha(3, 3, 0.5);
  CHECK_THROWS_AS(find_holes(Mask(alpha, MaskKind::soft)), InvalidArgument);
}

TEST_CASE("find_holes matches connected-component oracle and partitions the mask") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const Size size{static_cast<int>(rng.uniform_int(4, 24)), static_cast<int>(rng.uniform_int(4, 24))};
    const Mask m = random_glyph(size, rng);
    const auto holes = find_holes(m);
    const std::set<std::vector<std::size_t>> got(holes.begin(), holes.end());
    CHECK(got == hole_oracle(m));

    std::vector<int> cover(m.count(), 0);
    for (const auto& h : holes)
      for (std::size_t i : h) ++cover[i];
    for (std::size_t i = 0; i < m.count(); ++i) {
      if (m.on(i)) CHECK(cover[i] == 0);
      else CHECK(cover[i] <= 1);
    }
  }
}

TEST_CASE("hole ring equals the brute-force Chebyshev ring") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    const Mask m = synthesize_mask(MaskCategory::human_with_holes, {48, 48}, rng);
    const DepthMap d = random_depth({48, 48}, rng);
    for (const Hole& hole : find_holes(m)) {
      auto ring = hole_ring(m.size(), hole, 10);
      auto expected = ring_oracle(m.size(), hole, 10);
      std::sort(ring.begin(), ring.end());
      CHECK(ring == expected);
      double mean = 0;
      for (std::size_t i : expected) mean += d[i];
      mean /= static_cast<double>(expected.size());
      CHECK(std::abs(hole_stats(d, hole, 10).mean_ring - mean) < 1e-9);
    }
  }
}

TEST_CASE("hole_perturb fills with the degenerate mean") {
  const Mask donut = mask_from_rows({".....", ".###.", ".#.#.", ".###.", "....."});
  PerturbConfig cfg;
  Rng rng(3);
  const DepthMap out = hole_perturb(DepthMap(5, 5, 2.5), donut, cfg, rng);
  CHECK(out == DepthMap(5, 5, 2.5));
}

TEST_CASE("hole_perturb draws between inside and ring means") {
  const Mask m = mask_from_rows({
      "#######",
      "#######",
      "##...##",
      "##...##",
      "#######",
      "#######",
  });
  DepthMap d(7, 6, 8.0);
  const auto holes = find_holes(m);
  for (std::size_t i : holes[0]) d[i] = 4.0;
  PerturbConfig cfg;
  Rng a(99), b(99);
  const DepthMap out = hole_perturb(d, m, cfg, a);
  CHECK(out == hole_perturb(d, m, cfg, b));
  const auto hole = find_holes(m)[0];
  const double v = out[hole[0]];
  CHECK(v >= 4.0);
  CHECK(v <= 8.0);
  for (std::size_t i : hole) CHECK(out[i] == v);
  for (std::size_t i = 0; i < d.count(); ++i)
    if (m.on(i)) CHECK(out[i] == d[i]);
}

TEST_CASE("hole_perturb output is constant and bounded per hole") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Mask m = synthesize_mask(MaskCategory::human_with_holes, {40, 40}, rng);
    const DepthMap d = random_depth({40, 40}, rng);
    PerturbConfig cfg;
    const DepthMap out = hole_perturb(d, m, cfg, rng);
    for (const Hole& hole : find_holes(m)) {
      const HoleStats s = hole_stats(d, hole, cfg.hole_ring_width);
      for (std::size_t i : hole) {
        CHECK(out[i] == out[hole[0]]);
        CHECK(out[i] >= std::min(s.mean_inside, s.mean_ring));
        CHECK(out[i] <= std::max(s.mean_inside, s.mean_ring));
      }
    }
  }
}

TEST_CASE("perturb determinism, identity configuration and stage replay") {
  Rng data(17);
  const DepthMap d = random_depth({24, 24}, data);
  Rng mrng(18);
  const Mask m = synthesize_mask(MaskCategory::human_with_holes, {24, 24}, mrng);
  PerturbConfig cfg;
  cfg.hole_perturb_prob = 0.5;

  Rng a(5), b(5);
  CHECK(perturb(d, m, cfg, a) == perturb(d, m, cfg, b));

  PerturbConfig none = cfg;
  none.morph_iters = {0, 0};
  none.blur_small_sigma = {0, 0};
  none.blur_large_sigma = {0, 0};
  none.hole_perturb_prob = 0.0;
  Rng c(6);
  CHECK(perturb(d, m, none, c) == d);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng pipeline(seed), replay(seed);
    const DepthMap got = perturb(d, m, cfg, pipeline);
    DepthMap cur = random_morph(d, cfg, replay);
    const Interval iv = replay.bernoulli(cfg.blur_small_prob) ? cfg.blur_small_sigma : cfg.blur_large_sigma;
    cur = gaussian_blur(cur, replay.uniform(iv.lo, iv.hi));
    if (replay.bernoulli(cfg.hole_perturb_prob)) cur = hole_perturb(cur, m, cfg, replay);
    CHECK(got == cur);
  }
}

TEST_CASE("perturb config validation") {
  PerturbConfig cfg;
  cfg.morph_kernel = 4;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = PerturbConfig{};
  cfg.blur_small_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = PerturbConfig{};
  cfg.morph_iters = {3, 1};
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("sample_crop small object uses the patch size") {
  InstanceMap inst(320, 320, 0u);
  for (int y = 100; y < 140; ++y)
    for (int x = 50; x < 110; ++x) inst(x, y) = 3u;
  Rng rng(1);
  const CropSpec c = sample_crop(inst, 320, false, rng);
  CHECK(c.instance == 3u);
  CHECK(c.window.width == 320);
  CHECK(c.window.height == 320);
  CHECK(c.resized_to == 320);
}

TEST_CASE("sample_crop large object draws p from U(s, 2s) and contains the box") {
  InstanceMap inst(1200, 1200, 0u);
  for (int y = 300; y < 800; ++y)
    for (int x = 200; x < 600; ++x) inst(x, y) = 1u;
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(s);
    const CropSpec c = sample_crop(inst, 320, false, rng);
    CHECK(c.window.width >= 500);
    CHECK(c.window.width <= 1000);
    CHECK(c.window.x <= 200);
    CHECK(c.window.y <= 300);
    CHECK(c.window.x + c.window.width >= 600);
    CHECK(c.window.y + c.window.height >= 800);
    CHECK(c.window.x + c.window.width <= 1200);
  }
}

TEST_CASE("sample_crop stuff draws p from U(H/2, H)") {
  InstanceMap inst(640, 480, 0u);
  for (int y = 0; y < 200; ++y)
    for (int x = 0; x < 640; ++x) inst(x, y) = 7u;
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(s);
    const CropSpec c = sample_crop(inst, 320, true, rng);
    CHECK(c.window.width >= 240);
    CHECK(c.window.width <= 480);
    CHECK(c.window.x + c.window.width <= 640);
    CHECK(c.window.y + c.window.height <= 480);
  }
}

TEST_CASE("sample_crop signals when nothing qualifies") {
  InstanceMap inst(100, 100, 0u);
  inst(5, 5) = 2u;  // 0.01% of pixels
  Rng rng(0);
  CHECK_THROWS_AS(sample_crop(inst, 32, false, rng), NoQualifyingInstance);
}

TEST_CASE("sample_crop window always contains the chosen bounding box") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const Size size{static_cast<int>(rng.uniform_int(40, 120)), static_cast<int>(rng.uniform_int(40, 120))};
    const Mask m = synthesize_mask(MaskCategory::object, size, rng);
    InstanceMap inst(size.width, size.height, 0u);
    for (std::size_t i = 0; i < m.count(); ++i) inst[i] = m.on(i) ? 1u : 0u;
    const int patch = static_cast<int>(rng.uniform_int(8, 64));
    CropSpec c;
    try {
      c = sample_crop(inst, patch, false, rng);
    } catch (const NoQualifyingInstance&) {
      continue;
    }
    const BoundingBox b = instance_bbox(inst, c.instance);
    CHECK(c.window.x >= 0);
    CHECK(c.window.y >= 0);
    CHECK(c.window.x + c.window.width <= size.width);
    CHECK(c.window.y + c.window.height <= size.height);
    CHECK(c.window.x <= b.x0);
    CHECK(c.window.y <= b.y0);
    CHECK(c.window.x + c.window.width > b.x1);
    CHECK(c.window.y + c.window.height > b.y1);
  }
}

TEST_CASE("synthesize_mask properties") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    CHECK_FALSE(find_holes(synthesize_mask(MaskCategory::human_with_holes, {64, 64}, rng)).empty());
  }
  Rng a(3), b(3);
  CHECK(synthesize_mask(MaskCategory::object, {64, 48}, a) == synthesize_mask(MaskCategory::object, {64, 48}, b));
}

TEST_CASE("synthesize_mask coverage stays in [0.05, 0.8] over 1000 seeds") {
  const MaskCategory kinds[] = {MaskCategory::object, MaskCategory::sky, MaskCategory::human,
                                MaskCategory::human_with_holes};
  for (std::uint64_t s = 0; s < 1000; ++s) {
    Rng rng(s);
    const Mask m = synthesize_mask(kinds[s % 4], {48, 48}, rng);
    CHECK(m.is_binary());
    CHECK(m.coverage() >= 0.05);
    CHECK(m.coverage() <= 0.8);
  }
}

TEST_CASE("generate_sample recomposition identity and full mask") {
  Rng rng(12);
  const RgbdRecord a = synthetic_scene({40, 40}, rng, {.planes = 2});
  const RgbdRecord b = synthetic_scene({40, 40}, rng);
  const Mask m = synthesize_mask(MaskCategory::human_with_holes, {40, 40}, rng);
  PerturbConfig cfg;
  cfg.hole_perturb_prob = 1.0;
  const TrainingSample s = generate_sample(a, b, m, cfg, 77, {32, 32});
  CHECK(s.depth == composite(s.layer1, s.layer2, s.mask));
  Rng replay(77);
  CHECK(s.perturbed == perturb(s.depth, s.mask, cfg, replay));

  const TrainingSample full = generate_sample(a, b, Mask(40, 40, 1.0), cfg, 5, {40, 40});
  CHECK(full.depth == full.layer1);
  CHECK(full.rgb == a.rgb);
  CHECK_THROWS_AS(generate_sample(a, b, Mask(Raster<double>(40, 40, 0.5), MaskKind::soft), cfg, 1, {40, 40}),
                  InvalidArgument);
}

TEST_CASE("synthesized datasets are reproducible from the master seed") {
  GeneratorOptions opt;
  opt.patch = {32, 32};
  for (std::uint64_t i = 0; i < 100; ++i) {
    const TrainingSample x = synthesize_training_sample(opt, 7, i);
    const TrainingSample y = synthesize_training_sample(opt, 7, i);
    CHECK(x.perturbed == y.perturbed);
    CHECK(x.rgb == y.rgb);
    CHECK(x.mask == y.mask);
    CHECK(x.depth == composite(x.layer1, x.layer2, x.mask));
  }
}

TEST_CASE("degrade_mask identity, opening and closing") {
  const Mask m = mask_from_rows({
      "..........",
      ".#####....",
      ".#####....",
      ".######...",
      ".#####....",
      ".#####....",
      "..........",
  });
  CHECK(degrade_mask(m, MaskDegradation::opening, 0) == m);
  const Mask opened = degrade_mask(m, MaskDegradation::opening, 3);
  CHECK_FALSE(opened.on(6, 3));  // protrusion removed
  CHECK(opened.on(3, 3));

  const Mask holed = mask_from_rows({
      ".......",
      ".#####.",
      ".##.##.",
      ".#####.",
      ".......",
  });
  const Mask closed = degrade_mask(holed, MaskDegradation::closing, 3);
  CHECK(closed.on(3, 2));
  CHECK(find_holes(closed).empty());
}
