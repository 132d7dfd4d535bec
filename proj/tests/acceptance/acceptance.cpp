// Acceptance suite: one PASS/FAIL line per primary criterion.
//
// Criteria 1-4 and 9 compare the library against brute-force references.
// Criteria 5-8 drive the command-line pipeline in process on synthetic data.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "depthlayers/cli/commands.hpp"
#include "depthlayers/cli/dataset.hpp"
#include "depthlayers/cli/io.hpp"
#include "depthlayers/cli/report.hpp"
#include "depthlayers/completion/completion.hpp"
#include "depthlayers/core/atomic_file.hpp"
#include "depthlayers/core/compose.hpp"
#include "depthlayers/datagen/holes.hpp"
#include "depthlayers/datagen/masks.hpp"
#include "depthlayers/datagen/morphology.hpp"
#include "depthlayers/metrics/metrics.hpp"
#include "support/generators.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace depthlayers;
using namespace depthlayers::testing;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances and workloads ----

constexpr int kMergeCases = 1000;
constexpr double kMergeSeconds = 10.0;

constexpr int kMetricCases = 100;
constexpr double kMetricTol = 1e-9;
constexpr double kBoundaryTol = 1e-6;
constexpr double kMetricSeconds = 60.0;

constexpr int kMorphCases = 100;
constexpr double kMorphSeconds = 30.0;

constexpr double kGradTol = kFdRelTol;  // 1e-4
constexpr double kGradSeconds = 120.0;

constexpr int kDeterminismSamples = 24;
constexpr int kDeterminismPatch = 32;
constexpr int kDeterminismStage1 = 1000;
constexpr int kDeterminismStage2 = 1000;

constexpr int kDeskTrain = 500;
constexpr int kDeskHeldOut = 50;
constexpr int kDeskPatch = 64;
constexpr int kDeskStage1 = 1000;
constexpr int kDeskStage2 = 5000;
constexpr double kDeskMbeRatio = 0.6;
constexpr double kDeskR3 = 2.0;
constexpr double kDeskSeconds = 45.0 * 60.0;

constexpr int kFillCases = 50;
constexpr double kConstantFillTol = 1e-6;

// ---- reporting ----

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& title, const Outcome& o, double seconds) {
  std::printf("[PRIMARY %d] %s  %s: %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str(),
              seconds);
  std::fflush(stdout);
  if (!o.pass) ++g_failures;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Runs a command with its progress lines on stdout discarded.
int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "depthlayers");
  std::fflush(stdout);
  const int saved = ::dup(1);
  const int null = ::open("/dev/null", O_WRONLY);
  ::dup2(null, 1);
  ::close(null);
  const int code = cli::run(args);
  std::fflush(stdout);
  ::dup2(saved, 1);
  ::close(saved);
  return code;
}

void must(int code, const std::string& what) {
  if (code != cli::kExitOk) throw std::runtime_error(what + " exited with " + std::to_string(code));
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  return out;
}

// ---- 1: merge exactness ----

Outcome merge_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t checked = 0;
  for (int s = 0; s < kMergeCases; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    const Size size{static_cast<int>(rng.uniform_int(1, 48)), static_cast<int>(rng.uniform_int(1, 48))};
    const Mask m = random_binary_mask(size, rng, rng.uniform(0.0, 1.0));
    const DepthMap l1 = random_depth(size, rng), l2 = random_depth(size, rng);
    const DepthMap merged = merge_layers(l1, l2, m);
    for (std::size_t i = 0; i < merged.count(); ++i) {
      const double got = merged[i];
      const double want = m.on(i) ? l1[i] : l2[i];
      if (std::memcmp(&got, &want, sizeof want) != 0)
        return {false, "case " + std::to_string(s) + " pixel " + std::to_string(i) + " differs"};
      ++checked;
    }
  }
  const double secs = since(t0);
  return {secs < kMergeSeconds,
          std::to_string(kMergeCases) + " masks, " + std::to_string(checked) + " pixels bit-identical, " +
              fmt("%.2f s", secs) + " (limit 10 s)"};
}

// ---- 2: metric oracles ----

Outcome metric_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_mbe = 0, worst_r3 = 0, worst_rmse = 0, worst_whdr = 0, worst_be = 0;
  for (int s = 0; s < kMetricCases; ++s) {
    Rng rng(1000 + static_cast<std::uint64_t>(s));
    const Size size{16, 16};
    const InstanceMap inst = two_instances(rng, 16);
    const DepthMap g = random_depth(size, rng, 0.5, 10.0);
    const DepthMap p = random_depth(size, rng, 0.5, 10.0);
    const DepthMap init = random_depth(size, rng, 0.5, 10.0);

    worst_mbe = std::max(worst_mbe, std::abs(mbe(p, g, inst).value - mbe_oracle(p, g, inst)));
    worst_rmse = std::max(worst_rmse, std::abs(rmse(p, g) - rmse_oracle(p, g)));
    Rng unused(0);
    worst_whdr = std::max(worst_whdr, std::abs(whdr(p, g, std::nullopt, 0.1, unused).value - whdr_oracle(p, g, 0.1)));

    const auto [imp, wor] = r3_counts_oracle(p, init, g, 0.05);
    const double r3_ref = static_cast<double>(imp) / static_cast<double>(std::max<std::size_t>(wor, 1));
    worst_r3 = std::max(worst_r3, std::abs(r3(p, init, g, 0.05).value - r3_ref));

    // Piecewise-constant maps give edge sets with real structure.
    DepthMap pe(16, 16), ge(16, 16);
    for (std::size_t i = 0; i < ge.count(); ++i) {
      ge[i] = 1.0 + 2.0 * inst[i] + rng.uniform(0.0, 0.02);
      pe[i] = ge[i] + (rng.bernoulli(0.1) ? rng.uniform(-1.0, 1.0) : 0.0);
    }
    const auto be = boundary_error(pe, ge);
    const auto [acc, comp] = boundary_oracle(pe, ge);
    worst_be = std::max({worst_be, std::abs(be.accuracy - acc), std::abs(be.completeness - comp)});
  }
  const double secs = since(t0);
  const bool pass = worst_mbe <= kMetricTol && worst_r3 <= kMetricTol && worst_rmse <= kMetricTol &&
                    worst_whdr <= kMetricTol && worst_be <= kBoundaryTol && secs < kMetricSeconds;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%d cases, max |diff| mbe %.1e r3 %.1e rmse %.1e whdr %.1e boundary %.1e (tol 1e-9 / 1e-6), %.1f s",
                kMetricCases, worst_mbe, worst_r3, worst_rmse, worst_whdr, worst_be, secs);
  return {pass, buf};
}

// ---- 3: morphology and holes ----

Outcome morphology_and_holes() {
  const auto t0 = std::chrono::steady_clock::now();
  int morph_bad = 0, hole_bad = 0;
  for (int s = 0; s < kMorphCases; ++s) {
    Rng rng(2000 + static_cast<std::uint64_t>(s));
    const Size size{static_cast<int>(rng.uniform_int(1, 24)), static_cast<int>(rng.uniform_int(1, 24))};
    const DepthMap d = random_depth(size, rng);
    const int k = 2 * static_cast<int>(rng.uniform_int(0, 4)) + 1;
    const int iters = static_cast<int>(rng.uniform_int(1, 3));
    if (!(dilate(d, k, iters).values() == window_oracle_iter(d.values(), k, iters, true))) ++morph_bad;
    if (!(erode(d, k, iters).values() == window_oracle_iter(d.values(), k, iters, false))) ++morph_bad;

    const Size msize{static_cast<int>(rng.uniform_int(4, 32)), static_cast<int>(rng.uniform_int(4, 32))};
    const Mask m = random_glyph(msize, rng);
    const auto holes = find_holes(m);
    if (std::set<std::vector<std::size_t>>(holes.begin(), holes.end()) != hole_oracle(m)) ++hole_bad;
  }
  const double secs = since(t0);
  return {morph_bad == 0 && hole_bad == 0 && secs < kMorphSeconds,
          std::to_string(kMorphCases) + " cases, " + std::to_string(morph_bad) + " morphology and " +
              std::to_string(hole_bad) + " hole mismatches, " + fmt("%.1f s", secs) + " (limit 30 s)"};
}

// ---- 4: gradients ----

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  using namespace depthlayers::nn;
  double worst = 0.0;
  std::string worst_name;
  auto note = [&](const std::string& name, double e) {
    if (e > worst || std::isnan(e)) worst = std::isnan(e) ? INFINITY : e, worst_name = name;
  };
  int op_checks = 0;
  auto ops = [&](const std::string& name, const ScalarFn& f, const std::vector<Tensor>& in) {
    ++op_checks;
    for (double e : gradient_errors(f, in)) note(name, e);
  };
  Rng rng(4);
  const int n = 16;
  ops("conv s1", [](Tape& t, const auto& v) { return squared_distance(t, conv2d(t, v[0], v[1], v[2], 1, 1), 1); },
      {random_tensor({2, n, n}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)});
  ops("conv s2", [](Tape& t, const auto& v) { return squared_distance(t, conv2d(t, v[0], v[1], v[2], 2, 1), 2); },
      {random_tensor({2, n, n}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)});
  ops("conv 1x1", [](Tape& t, const auto& v) { return squared_distance(t, conv2d(t, v[0], v[1], v[2], 1, 0), 3); },
      {random_tensor({2, n, n}, rng), random_tensor({1, 2, 1, 1}, rng), random_tensor({1}, rng)});
  {
    Tensor x = random_tensor({2, n, n}, rng, 0.1, 1.0);
    for (std::size_t i = 0; i < x.numel(); i += 2) x[i] = -x[i];
    ops("leaky_relu", [](Tape& t, const auto& v) { return squared_distance(t, leaky_relu(t, v[0], 0.01), 4); }, {x});
  }
  ops("add/sub/scale/sum",
      [](Tape& t, const auto& v) {
        return squared_distance(t, sum(t, {add(t, v[0], v[1]), sub(t, v[0], scale(t, v[1], 2.5))}), 5);
      },
      {random_tensor({1, n, n}, rng), random_tensor({1, n, n}, rng)});
  ops("concat", [](Tape& t, const auto& v) { return squared_distance(t, concat(t, v[0], v[1]), 6); },
      {random_tensor({2, n, n}, rng), random_tensor({1, n, n}, rng)});
  ops("upsample2", [](Tape& t, const auto& v) { return squared_distance(t, upsample2(t, v[0]), 7); },
      {random_tensor({2, n / 2, n / 2}, rng)});
  ops("avgpool2", [](Tape& t, const auto& v) { return squared_distance(t, avgpool2(t, v[0]), 8); },
      {random_tensor({2, n, n}, rng)});
  ops("crop", [](Tape& t, const auto& v) { return squared_distance(t, crop(t, v[0], n - 3, n - 2), 9); },
      {random_tensor({2, n, n}, rng)});
  {
    const Tensor alpha = random_tensor({1, n, n}, rng, 0.0, 1.0);
    ops("blend", [alpha](Tape& t, const auto& v) { return squared_distance(t, blend(t, v[0], v[1], alpha), 10); },
        {random_tensor({2, n, n}, rng), random_tensor({2, n, n}, rng)});
  }
  {
    Tensor x({1, n, n});
    for (std::size_t i = 0; i < x.numel(); ++i)
      x[i] = (i % 2 ? 1.0 : -1.0) * (0.05 * static_cast<double>((i * 7) % 25) + 0.05);
    ops("mean_abs", [](Tape& t, const auto& v) { return mean_abs(t, v[0]); }, {x});
    ops("mean_square", [](Tape& t, const auto& v) { return mean_square(t, v[0]); }, {x});
    ops("gradient_abs_mean", [](Tape& t, const auto& v) { return gradient_abs_mean(t, v[0]); }, {x});
  }

  NetConfig cfg;
  cfg.widths = {2, 3, 4};
  const ModelParams params = ModelParams::initialize(cfg, 3);
  const Size size{n, n};
  TrainingSample s;
  s.depth = random_depth(size, rng, 1.0, 9.0);
  s.rgb = random_rgb(size, rng);
  s.mask = random_binary_mask(size, rng, 0.4);
  s.layer1 = random_depth(size, rng, 1.0, 9.0);
  s.layer2 = random_depth(size, rng, 1.0, 9.0);
  s.perturbed = random_depth(size, rng, 1.0, 9.0);
  std::size_t groups = 0;
  bool replay_ok = true;
  for (TrainMode mode : {TrainMode::stage1, TrainMode::stage2, TrainMode::direct}) {
    bool ok = false;
    for (const auto& g : model_gradient_errors(params, s, mode, &ok)) {
      note(to_string(mode) + " loss / " + g.name, g.error);
      ++groups;
    }
    replay_ok = replay_ok && ok;
  }
  const double secs = since(t0);
  return {worst < kGradTol && replay_ok && secs < kGradSeconds,
          std::to_string(op_checks) + " op checks and " + std::to_string(groups) + " parameter-group checks at 16x16, worst rel err " +
              fmt("%.2e", worst) + " (" + worst_name + ", tol 1e-4), " + fmt("%.1f s", secs) + " (limit 120 s)"};
}

// ---- 5: determinism ----

Outcome determinism(const fs::path& work) {
  const std::vector<std::string> net{"--set", "train.widths=4,8,8", "--set", "train.bottleneck_blocks=1",
                                     "--set", "train.learning_rate=0.001", "--log-level", "error"};
  auto pipeline = [&](const fs::path& root, int workers) {
    const std::string w = std::to_string(workers);
    auto args = [&](std::vector<std::string> a) {
      a.insert(a.end(), net.begin(), net.end());
      a.insert(a.end(), {"--workers", w, "--seed", "11"});
      return a;
    };
    must(cli(args({"generate", "--out", (root / "data").string(), "--count", std::to_string(kDeterminismSamples),
                   "--patch", std::to_string(kDeterminismPatch)})),
         "generate");
    must(cli(args({"train", "--dataset", (root / "data").string(), "--out", (root / "model").string(), "--stage",
                   "both", "--set", "train.stage1_iterations=" + std::to_string(kDeterminismStage1), "--set",
                   "train.stage2_iterations=" + std::to_string(kDeterminismStage2)})),
         "train");
    must(cli(args({"refine", "--dataset", (root / "data").string(), "--backend", "toynet", "--checkpoint",
                   (root / "model" / "stage2.ckpt").string(), "--out", (root / "pred").string()})),
         "refine");
    must(cli(args({"evaluate", "--dataset", (root / "data").string(), "--pred", (root / "pred").string(), "--sweep",
                   "--backend", "toynet", "--checkpoint", (root / "model" / "stage2.ckpt").string(), "--out",
                   (root / "eval").string()})),
         "evaluate");
  };
  pipeline(work / "w1", 1);
  pipeline(work / "w4", 4);
  pipeline(work / "w1_again", 1);
  const auto a = tree_bytes(work / "w1");
  const auto b = tree_bytes(work / "w4");
  const auto c = tree_bytes(work / "w1_again");
  std::size_t bytes = 0;
  for (const auto& [k, v] : a) bytes += v.size();
  std::string first_diff;
  for (const auto& other : {&b, &c})
    for (const auto& [k, v] : a) {
      const auto it = other->find(k);
      if (first_diff.empty() && (it == other->end() || it->second != v)) first_diff = k;
    }
  const bool pass = a == b && a == c && a.count("model/stage2.ckpt") && a.count("eval/report.json");
  return {pass, std::to_string(a.size()) + " files (" + std::to_string(bytes) +
                    " bytes) from generate, train (" + std::to_string(kDeterminismStage1 + kDeterminismStage2) +
                    " iterations), refine and evaluate identical across a rerun and 1 vs 4 workers" +
                    (first_diff.empty() ? "" : "; first difference in " + first_diff)};
}

// ---- 6-8: desk-scale pipeline ----

struct DeskRun {
  fs::path root;
  double seconds = 0.0;
  double perturbed_mbe = 0.0;
  double refined_mbe = 0.0;
  double refined_r3 = 0.0;
  io::EvaluationReport refined;
};

std::vector<std::string> desk_settings() {
  return {"--set", "train.widths=8,16,32",
          "--set", "train.learning_rate=0.001",
          "--set", "train.stage1_iterations=" + std::to_string(kDeskStage1),
          "--set", "train.stage2_iterations=" + std::to_string(kDeskStage2),
          "--set", "generate.patch_width=" + std::to_string(kDeskPatch),
          "--set", "generate.patch_height=" + std::to_string(kDeskPatch),
          "--workers", "0",
          "--log-level", "error"};
}

std::vector<std::string> with_settings(std::vector<std::string> a) {
  const auto s = desk_settings();
  a.insert(a.end(), s.begin(), s.end());
  return a;
}

io::EvaluationReport evaluate_preds(const fs::path& data, const fs::path& preds, const fs::path& out) {
  must(cli(with_settings({"evaluate", "--dataset", data.string(), "--pred", preds.string(), "--out", out.string()})),
       "evaluate");
  return io::report_from_json(read_file(out / "report.json"));
}

io::EvaluationReport refine_and_evaluate(const fs::path& root, const std::string& name,
                                         std::vector<std::string> refine_flags) {
  std::vector<std::string> a{"refine", "--dataset", (root / "heldout").string(), "--out",
                             (root / ("pred_" + name)).string()};
  a.insert(a.end(), refine_flags.begin(), refine_flags.end());
  must(cli(with_settings(a)), "refine " + name);
  return evaluate_preds(root / "heldout", root / ("pred_" + name), root / ("eval_" + name));
}

DeskRun desk_pipeline(const fs::path& root) {
  DeskRun r;
  r.root = root;
  const auto t0 = std::chrono::steady_clock::now();
  must(cli(with_settings(
           {"generate", "--out", (root / "train").string(), "--count", std::to_string(kDeskTrain), "--seed", "1"})),
       "generate train");
  must(cli(with_settings({"generate", "--out", (root / "heldout").string(), "--count", std::to_string(kDeskHeldOut),
                          "--seed", "2"})),
       "generate held-out");
  must(cli(with_settings(
           {"train", "--dataset", (root / "train").string(), "--out", (root / "model").string(), "--seed", "3"})),
       "train");
  r.refined = refine_and_evaluate(root, "layered",
                                  {"--backend", "toynet", "--checkpoint", (root / "model" / "stage2.ckpt").string()});
  r.seconds = since(t0);
  const auto perturbed = refine_and_evaluate(root, "identity", {"--backend", "identity"});
  r.perturbed_mbe = perturbed.aggregate.mbe;
  r.refined_mbe = r.refined.aggregate.mbe;
  r.refined_r3 = r.refined.aggregate.r3.value_or(0.0);
  return r;
}

Outcome desk_scale(const DeskRun& r) {
  const double ratio = r.refined_mbe / r.perturbed_mbe;
  const bool pass = ratio <= kDeskMbeRatio && r.refined_r3 >= kDeskR3 && r.seconds < kDeskSeconds;
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "%d train / %d held-out at %dx%d, %d + %d iterations; MBE %.4f vs perturbed %.4f (ratio %.3f, need "
                "<= %.2f), R3 %.3f (need >= %.1f), %.0f s (limit %.0f s)",
                kDeskTrain, kDeskHeldOut, kDeskPatch, kDeskPatch, kDeskStage1, kDeskStage2, r.refined_mbe,
                r.perturbed_mbe, ratio, kDeskMbeRatio, r.refined_r3, kDeskR3, r.seconds, kDeskSeconds);
  return {pass, buf};
}

Outcome ordering(const DeskRun& r) {
  const fs::path& root = r.root;
  must(cli(with_settings({"train", "--dataset", (root / "train").string(), "--out", (root / "model").string(),
                          "--seed", "3", "--stage", "direct"})),
       "train direct");
  const auto direct = refine_and_evaluate(
      root, "direct", {"--backend", "toynet", "--direct", "--checkpoint", (root / "model" / "direct.ckpt").string()});
  const auto baseline = refine_and_evaluate(root, "propagation", {"--backend", "propagation"});
  const double layered = r.refined_mbe, dir = direct.aggregate.mbe, base = baseline.aggregate.mbe;
  const bool pass = layered < dir && base < r.perturbed_mbe;
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "suite-mean MBE: layered toynet %.4f < direct toynet %.4f (%d iterations) : %s; layered propagation "
                "%.4f < perturbed %.4f : %s",
                layered, dir, kDeskStage1 + kDeskStage2, layered < dir ? "yes" : "no", base, r.perturbed_mbe,
                base < r.perturbed_mbe ? "yes" : "no");
  return {pass, buf};
}

Outcome degradation_trend(const DeskRun& r) {
  const fs::path& root = r.root;
  must(cli(with_settings({"evaluate", "--dataset", (root / "heldout").string(), "--sweep", "--backend", "toynet",
                          "--checkpoint", (root / "model" / "stage2.ckpt").string(), "--out",
                          (root / "sweep").string()})),
       "sweep");
  const auto rep = io::report_from_json(read_file(root / "sweep" / "report.json"));
  bool monotone = true, below = true;
  std::string table;
  for (MaskDegradation op : {MaskDegradation::opening, MaskDegradation::closing}) {
    double last = -INFINITY;
    table += std::string(table.empty() ? "" : "; ") + to_string(op);
    for (const auto& row : rep.sweep) {
      if (row.op != op) continue;
      monotone = monotone && row.mbe >= last;
      last = row.mbe;
      if (row.kernel <= 5) below = below && row.mbe < r.perturbed_mbe;
      table += fmt(" %.4f", row.mbe);
    }
  }
  return {monotone && below && rep.sweep.size() == 10,
          "MBE for k = 0,3,5,7,9: " + table + "; perturbed " + fmt("%.4f", r.perturbed_mbe) +
              "; non-decreasing " + (monotone ? "yes" : "no") + ", below perturbed for k <= 5 " +
              (below ? "yes" : "no")};
}

// ---- 9: fill envelope ----

Outcome fill_envelope() {
  int envelope_bad = 0;
  double worst_const = 0.0;
  for (int s = 0; s < kFillCases; ++s) {
    Rng rng(9000 + static_cast<std::uint64_t>(s));
    const Size size{static_cast<int>(rng.uniform_int(12, 48)), static_cast<int>(rng.uniform_int(12, 48))};
    const MaskCategory cat = s % 3 == 0 ? MaskCategory::object : s % 3 == 1 ? MaskCategory::sky : MaskCategory::human_with_holes;
    const Mask unknown = synthesize_mask(cat, size, rng);
    const int radius = static_cast<int>(rng.uniform_int(1, 7));
    const DepthMap d = random_depth(size, rng);
    const DepthMap out = propagate_fill(d, FillRegion{unknown}, radius);

    // Band: known pixels within Euclidean distance `radius` of some unknown pixel, by brute force.
    double lo = INFINITY, hi = -INFINITY;
    for (int y = 0; y < size.height; ++y)
      for (int x = 0; x < size.width; ++x) {
        if (unknown.on(x, y)) continue;
        bool near = false;
        for (int qy = 0; qy < size.height && !near; ++qy)
          for (int qx = 0; qx < size.width && !near; ++qx)
            near = unknown.on(qx, qy) && (qx - x) * (qx - x) + (qy - y) * (qy - y) <= radius * radius;
        if (near) lo = std::min(lo, d(x, y)), hi = std::max(hi, d(x, y));
      }
    for (std::size_t i = 0; i < d.count(); ++i)
      if (unknown.on(i) && !(out[i] >= lo && out[i] <= hi)) ++envelope_bad;

    const double c = rng.uniform(0.5, 9.5);
    DepthMap flat = random_depth(size, rng);
    for (std::size_t i = 0; i < flat.count(); ++i)
      if (!unknown.on(i)) flat[i] = c;
    const DepthMap filled = propagate_fill(flat, FillRegion{unknown}, radius);
    for (std::size_t i = 0; i < flat.count(); ++i)
      if (unknown.on(i)) worst_const = std::max(worst_const, std::abs(filled[i] - c));
  }
  return {envelope_bad == 0 && worst_const <= kConstantFillTol,
          std::to_string(kFillCases) + " cases, " + std::to_string(envelope_bad) +
              " filled pixels outside the band envelope; constant boundary max deviation " + fmt("%.1e", worst_const) +
              " (tol 1e-6)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  fs::path work = fs::temp_directory_path() / "depthlayers_acceptance";
  bool keep = false;
  app.add_option("--only", only, "Run these criteria (default: all)")->delimiter(',');
  app.add_option("--workdir", work, "Scratch directory");
  app.add_flag("--keep", keep, "Keep the scratch directory");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  auto run = [&](int id, const std::string& title, const std::function<Outcome()>& fn) {
    if (!wanted(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    report(id, title, o, since(t0));
  };

  fs::remove_all(work);
  fs::create_directories(work);

  run(1, "merge exactness", merge_exactness);
  run(2, "metric oracles", metric_oracles);
  run(3, "morphology and holes", morphology_and_holes);
  run(4, "gradient correctness", gradients);
  run(5, "determinism", [&] { return determinism(work / "determinism"); });

  std::optional<DeskRun> desk;
  std::string desk_error;
  if (wanted(6) || wanted(7) || wanted(8)) {
    try {
      desk = desk_pipeline(work / "desk");
    } catch (const std::exception& e) {
      desk_error = e.what();
    }
  }
  auto needs_desk = [&](const std::function<Outcome(const DeskRun&)>& fn) {
    return [&, fn]() -> Outcome {
      if (!desk) return {false, "desk-scale pipeline failed: " + desk_error};
      return fn(*desk);
    };
  };
  run(6, "desk-scale end-to-end", needs_desk(desk_scale));
  run(7, "ordering sanity", needs_desk(ordering));
  run(8, "mask-degradation trend", needs_desk(degradation_trend));
  run(9, "propagation fill envelope", fill_envelope);

  if (!keep) fs::remove_all(work);
  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
