#include "depthlayers/toynet/model.hpp"

#include <cmath>
#include <initializer_list>
#include <string>

#include "depthlayers/core/error.hpp"
#include "depthlayers/core/random.hpp"
#include "depthlayers/toynet/ops.hpp"

namespace depthlayers::nn {

namespace {

struct LayerSpec {
  const char* name;
  int out, in, k;
};

// Listed in the order forward() consumes them.
std::vector<LayerSpec> layer_specs(const NetConfig& c) {
  const int c1 = c.widths[0], c2 = c.widths[1], c3 = c.widths[2];
  std::vector<LayerSpec> specs{{"main_stem", c1, 2, 3}, {"aux_stem", c1, 4, 3}, {"enc2", c2, c1, 3}, {"enc3", c3, c2, 3}};
  static const char* const kMid[][2] = {{"mid1a", "mid1b"}, {"mid2a", "mid2b"}, {"mid3a", "mid3b"}, {"mid4a", "mid4b"}};
  for (int b = 0; b < c.bottleneck_blocks; ++b) {
    specs.push_back({kMid[b][0], c3, c3, 3});
    specs.push_back({kMid[b][1], c3, c3, 3});
  }
  for (const LayerSpec& l : std::initializer_list<LayerSpec>{{"up3", c2, c3, 3},
                                                             {"fuse2", c2, c2, 3},
                                                             {"up2", c1, c2, 3},
                                                             {"fuse1", c1, c1, 3},
                                                             {"low", c1, 1, 3},
                                                             {"head", c1, 2 * c1, 3},
                                                             {"out", 1, c1, 1}})
    specs.push_back(l);
  return specs;
}

int round_up(int v, int m) { return (v + m - 1) / m * m; }

}  // namespace

void NetConfig::validate() const {
  for (int w : widths)
    if (w < 1) throw InvalidArgument("network widths must be positive");
  if (!(slope >= 0.0 && slope < 1.0)) throw InvalidArgument("leaky slope must lie in [0, 1)");
  if (bottleneck_blocks < 0 || bottleneck_blocks > kMaxBottleneckBlocks)
    throw InvalidArgument("bottleneck blocks must lie in [0, " + std::to_string(kMaxBottleneckBlocks) + "]");
}

ModelParams::ModelParams(NetConfig config) : config_(config) {
  config_.validate();
  for (const auto& l : layer_specs(config_)) {
    tensors_.push_back({std::string(l.name) + ".w", Tensor({l.out, l.in, l.k, l.k})});
    tensors_.push_back({std::string(l.name) + ".b", Tensor({l.out})});
  }
}

ModelParams ModelParams::initialize(const NetConfig& config, std::uint64_t seed) {
  ModelParams p(config);
  Rng rng(seed);
  for (auto& [name, t] : p.tensors_) {
    if (t.shape.size() != 4) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.dim(1) * t.dim(2) * t.dim(3)));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
  }
  return p;
}

Tensor& ModelParams::get(const std::string& name) {
  for (auto& nt : tensors_)
    if (nt.name == name) return nt.value;
  throw InvalidArgument("unknown parameter " + name);
}

const Tensor& ModelParams::get(const std::string& name) const { return const_cast<ModelParams*>(this)->get(name); }

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& nt : tensors_) n += nt.value.numel();
  return n;
}

std::vector<Var> bind(Tape& tape, const ModelParams& params) {
  std::vector<Var> vars;
  vars.reserve(params.tensors().size());
  for (const auto& nt : params.tensors()) vars.push_back(tape.variable(nt.value));
  return vars;
}

Tensor to_tensor(const DepthMap& d) {
  Tensor t({1, d.height(), d.width()});
  for (std::size_t i = 0; i < d.count(); ++i) t[i] = d[i];
  return t;
}

DepthMap to_depth(const Tensor& t) {
  if (t.shape.size() != 3 || t.dim(0) != 1) throw DimensionMismatch("to_depth expects a (1,H,W) tensor");
  return DepthMap(t.dim(2), t.dim(1), t.data);
}

Var forward(Tape& tape, const ModelParams& params, const std::vector<Var>& vars, const DepthMap& depth,
            const RgbImage& rgb, const Mask& mask) {
  require_same_size(depth.size(), rgb.size(), "forward");
  require_same_size(depth.size(), mask.size(), "forward");
  if (vars.size() != params.tensors().size()) throw InvalidArgument("forward: parameter binding size mismatch");
  const int h = depth.height(), w = depth.width();
  const int ph = round_up(h, kDownsampling), pw = round_up(w, kDownsampling);

  Tensor d_raw({1, ph, pw}), d_in({1, ph, pw}), aux({4, ph, pw}), main({2, ph, pw});
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      const int sx = std::min(x, w - 1), sy = std::min(y, h - 1);
      const double dv = depth(sx, sy);
      const double mv = mask.alpha()(sx, sy);
      d_raw.at(0, y, x) = dv;
      d_in.at(0, y, x) = kInputDepthScale * dv;
      main.at(0, y, x) = kInputDepthScale * dv;
      main.at(1, y, x) = mv;
      for (int c = 0; c < 3; ++c) aux.at(c, y, x) = rgb(c, sx, sy);
      aux.at(3, y, x) = mv;
    }
  }

  std::size_t next = 0;
  const double slope = params.config().slope;
  auto conv = [&](Var x, int stride, bool activate) {
    const Var wv = vars[next++];
    const Var bv = vars[next++];
    const int k = tape.value(wv).dim(2);
    const Var y = conv2d(tape, x, wv, bv, stride, k / 2);
    return activate ? leaky_relu(tape, y, slope) : y;
  };

  const Var main_in = tape.constant(std::move(main));
  const Var aux_in = tape.constant(std::move(aux));
  const Var e1a = conv(main_in, 1, true);
  const Var e1b = conv(aux_in, 1, true);
  const Var e1 = add(tape, e1a, e1b);
  const Var e2 = conv(e1, 2, true);
  Var e3 = conv(e2, 2, true);
  for (int b = 0; b < params.config().bottleneck_blocks; ++b) {
    const Var inner = conv(e3, 1, true);
    e3 = add(tape, e3, conv(inner, 1, true));
  }
  const Var d2 = conv(upsample2(tape, e3), 1, true);
  const Var f2 = conv(add(tape, d2, e2), 1, true);
  const Var d1 = conv(upsample2(tape, f2), 1, true);
  const Var f1 = conv(add(tape, d1, e1), 1, true);
  const Var low = conv(tape.constant(std::move(d_in)), 1, true);
  const Var head = conv(concat(tape, f1, low), 1, true);
  Var out = conv(head, 1, false);
  if (params.config().residual) out = add(tape, out, tape.constant(std::move(d_raw)));
  return crop(tape, out, h, w);
}

DepthMap predict(const ModelParams& params, const DepthMap& depth, const RgbImage& rgb, const Mask& mask) {
  Tape tape(false);
  const auto vars = bind(tape, params);
  return to_depth(tape.value(forward(tape, params, vars, depth, rgb, mask)));
}

LossTerms composite_loss(Tape& tape, Var pred, Var target) {
  const Var r = sub(tape, pred, target);
  LossTerms terms;
  const Var l1 = mean_abs(tape, r);
  const Var l2 = mean_square(tape, r);
  std::vector<Var> grads;
  Var level = r;
  for (int k = 0; k < kGradientLossLevels; ++k) {
    if (k > 0) {
      const Tensor& lv = tape.value(level);
      if (lv.dim(1) < 2 || lv.dim(2) < 2) break;
      level = avgpool2(tape, level);
    }
    grads.push_back(gradient_abs_mean(tape, level));
  }
  const Var g = sum(tape, grads);
  terms.l1 = tape.value(l1)[0];
  terms.l2 = tape.value(l2)[0];
  terms.grad = tape.value(g)[0];
  terms.total = sum(tape, {l1, l2, g});
  return terms;
}

}  // namespace depthlayers::nn
