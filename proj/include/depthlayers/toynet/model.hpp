#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "depthlayers/core/raster.hpp"
#include "depthlayers/toynet/tensor.hpp"

namespace depthlayers::nn {

struct NetConfig {
  std::array<int, 3> widths{16, 32, 64};  // encoder levels at strides 1, 2, 4
  bool residual = true;                   // add the input depth to the head output
  double slope = 0.01;                    // leaky rectifier
  int bottleneck_blocks = 2;              // residual pairs of 3x3 convolutions at stride 4

  void validate() const;
  bool operator==(const NetConfig&) const = default;
};

// Depth enters the network scaled by this factor; the head output is in depth units.
inline constexpr double kInputDepthScale = 0.1;
inline constexpr int kDownsampling = 4;
inline constexpr int kMaxBottleneckBlocks = 4;

struct NamedTensor {
  std::string name;
  Tensor value;
  bool operator==(const NamedTensor&) const = default;
};

class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(NetConfig config);  // all-zero parameters with the right shapes

  // Fan-in scaled uniform weights in +-1/sqrt(fan_in), zero biases.
  static ModelParams initialize(const NetConfig& config, std::uint64_t seed);

  const NetConfig& config() const { return config_; }
  std::vector<NamedTensor>& tensors() { return tensors_; }
  const std::vector<NamedTensor>& tensors() const { return tensors_; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  std::size_t parameter_count() const;

  bool operator==(const ModelParams&) const = default;

 private:
  NetConfig config_;
  std::vector<NamedTensor> tensors_;
};

// Parameter leaves on a tape, in ModelParams order.
std::vector<Var> bind(Tape& tape, const ModelParams& params);

// Records one pass and returns the (1,H,W) prediction. Inputs whose sides are not
// multiples of kDownsampling are replicate-padded and the output is cropped back.
Var forward(Tape& tape, const ModelParams& params, const std::vector<Var>& vars, const DepthMap& depth,
            const RgbImage& rgb, const Mask& mask);

// Inference without gradient bookkeeping.
DepthMap predict(const ModelParams& params, const DepthMap& depth, const RgbImage& rgb, const Mask& mask);

struct LossTerms {
  Var total;
  double l1 = 0.0;
  double l2 = 0.0;
  double grad = 0.0;
};

inline constexpr int kGradientLossLevels = 4;

// mean|r| + mean r^2 + sum over four 2x average-pooled levels of the mean absolute forward differences, r = pred - target.
LossTerms composite_loss(Tape& tape, Var pred, Var target);

Tensor to_tensor(const DepthMap& d);
DepthMap to_depth(const Tensor& t);

}  // namespace depthlayers::nn
