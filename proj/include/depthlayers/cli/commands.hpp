#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "depthlayers/cli/config.hpp"
#include "depthlayers/cli/report.hpp"
#include "depthlayers/refine/refine.hpp"

namespace depthlayers::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Entry point shared by the executable and the tests. args[0] is the program name.
int run(const std::vector<std::string>& args);

struct GenerateSummary {
  std::size_t samples = 0;
  std::size_t object = 0, sky = 0, human = 0, human_with_holes = 0;
};
GenerateSummary generate(const RunConfig& cfg, const std::filesystem::path& out);

enum class StageSelection { stage1, stage2, both, direct };

struct TrainRequest {
  StageSelection stages = StageSelection::both;
  std::optional<int> iterations;           // overrides the configured count of each selected stage
  std::filesystem::path init;              // stage-1 checkpoint for stage 2
  std::filesystem::path resume;            // continue an interrupted run
  bool from_scratch = false;               // stage 2 without stage-1 weights
};
/// Writes <out>/<mode>.ckpt and <out>/<mode>_loss.csv for every stage run.
void train(const RunConfig& cfg, const TrainRequest& req, const std::filesystem::path& dataset,
           const std::filesystem::path& out);

/// The configured refinement: backend choice, layered or direct, optional resampling.
class Refiner {
 public:
  /// `checkpoint` is read for the toynet backend only.
  Refiner(const RefineOptions& opts, const std::filesystem::path& checkpoint);

  /// Layered result at native resolution. With infer_size set, both layers are
  /// computed at that size, resized back, and merged with the original mask.
  LayeredResult layered(const DepthMap& d, const RgbImage& rgb, const Mask& m) const;
  /// Merged output, or the single pass output when layering is off.
  DepthMap refine(const DepthMap& d, const RgbImage& rgb, const Mask& m) const;
  /// Instance-map inference (layered only).
  DepthMap refine_instances(const DepthMap& d, const RgbImage& rgb, const InstanceMap& inst,
                            double min_fraction) const;

  const RefineOptions& options() const { return opts_; }

 private:
  RefineOptions opts_;
  std::unique_ptr<RefinerBackend> layer1_;
  std::unique_ptr<RefinerBackend> layer2_;
};

/// Per-image metrics of `preds` against a generated dataset (perturbed depth as the initial estimate).
io::EvaluationReport evaluate_dataset(const RunConfig& cfg, const std::filesystem::path& dataset,
                                      const std::vector<DepthMap>& preds);

/// Mask-degradation sweep: mean MBE and RMSE of the refined output for each (op, k). The
/// degraded mask drives the refinement; the metrics use the original mask as the instance map.
std::vector<io::SweepRow> degradation_sweep(const RunConfig& cfg, const Refiner& refiner,
                                            const std::filesystem::path& dataset);

}  // namespace depthlayers::cli
