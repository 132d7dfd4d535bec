#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "depthlayers/datagen/sample.hpp"
#include "depthlayers/refine/refine.hpp"
#include "depthlayers/toynet/model.hpp"

namespace depthlayers::nn {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  bool operator==(const AdamWConfig&) const = default;
};

struct OptimizerState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t step = 0;     // completed updates
  std::int64_t skipped = 0;  // updates dropped for non-finite gradients
  bool operator==(const OptimizerState&) const = default;
};

// Decoupled weight decay Adam. Returns false, and leaves parameters and moments
// untouched, if any gradient is non-finite.
bool adamw_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, OptimizerState& state,
                const AdamWConfig& cfg, double lr);

enum class TrainMode { stage1, stage2, direct };
std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& text);

struct TrainConfig {
  NetConfig net;
  AdamWConfig adam;
  double learning_rate = 1e-4;
  double first_decay = 0.6;   // fraction of iterations
  double second_decay = 0.8;
  double decay_factor = 0.1;
  int iterations = 1000;
  int batch = 1;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Learning rate for the 0-based `iteration` of a run of cfg.iterations.
double learning_rate_at(const TrainConfig& cfg, int iteration);

struct LossRecord {
  int iteration = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  double grad = 0.0;
  double total = 0.0;
  bool operator==(const LossRecord&) const = default;
};

struct TrainState {
  TrainConfig config;
  TrainMode mode = TrainMode::stage1;
  ModelParams params;
  OptimizerState optimizer;
  int iteration = 0;  // completed iterations
  std::vector<LossRecord> log;
  Size sample_size;  // recorded by the first train() call; later calls require the same size
  bool operator==(const TrainState&) const = default;
};

// Fresh state; `init` seeds the parameters (required for stage 2), otherwise they are drawn from cfg.seed.
TrainState start_training(const TrainConfig& cfg, TrainMode mode, const ModelParams* init = nullptr);

using IterationCallback = std::function<void(const TrainState&)>;

// Runs iterations until `until` (clamped to cfg.iterations). Each iteration draws its
// samples from a generator derived from (seed, mode, iteration), so stopping and resuming
// reproduces an uninterrupted run exactly. Batch elements are spread over `workers`
// threads and their gradients summed in batch order.
void train(TrainState& state, const std::vector<TrainingSample>& dataset, int until,
           const IterationCallback& on_iteration = {}, int workers = 1);

// Records the training loss of one sample on `tape`; `losses` receives the term values.
Var iteration_loss(Tape& tape, const ModelParams& params, const std::vector<Var>& vars, TrainMode mode,
                   const TrainingSample& sample, bool use_inverse_mask, LossRecord& losses);

// Loss and gradients of one sample.
struct IterationResult {
  LossRecord losses;
  std::vector<Tensor> grads;
};
IterationResult iteration_gradients(const ModelParams& params, TrainMode mode, const TrainingSample& sample,
                                    bool use_inverse_mask);

struct TrainResult {
  ModelParams params;
  std::vector<LossRecord> log;
  std::int64_t skipped_steps = 0;
};

// Completion training on clean composites, a fair coin choosing M (target layer 1) or 1 - M (target layer 2).
TrainResult train_stage1(const TrainConfig& cfg, const std::vector<TrainingSample>& dataset);
// Two passes on perturbed depth, merged by M, three unit-weighted losses.
TrainResult train_stage2(const TrainConfig& cfg, const std::vector<TrainingSample>& dataset, const ModelParams& init);
// Single pass on perturbed depth supervised by the composite depth.
TrainResult train_direct(const TrainConfig& cfg, const std::vector<TrainingSample>& dataset);

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& log);

// Binary checkpoint: "DLYR", version, key=value metadata, then named little-endian f64 tensors.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

class ToyNetBackend final : public RefinerBackend {
 public:
  explicit ToyNetBackend(ModelParams params) : params_(std::move(params)) {}
  DepthMap refine_layer(const DepthMap& perturbed, const RgbImage& rgb, const Mask& mask) const override;
  std::string name() const override { return "toynet"; }
  const ModelParams& params() const { return params_; }

 private:
  ModelParams params_;
};

std::unique_ptr<RefinerBackend> export_backend(const ModelParams& params);

}  // namespace depthlayers::nn
