#include "depthlayers/toynet/train.hpp"

#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "depthlayers/core/atomic_file.hpp"
#include "depthlayers/core/error.hpp"
#include "depthlayers/core/parallel.hpp"
#include "depthlayers/core/random.hpp"
#include "depthlayers/toynet/ops.hpp"

namespace depthlayers::nn {

bool adamw_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, OptimizerState& state,
                const AdamWConfig& cfg, double lr) {
  if (params.size() != grads.size()) throw InvalidArgument("adamw_step: parameter and gradient counts differ");
  for (const auto& g : grads)
    for (double v : g.data)
      if (!std::isfinite(v)) {
        ++state.skipped;
        return false;
      }
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->shape, 0.0);
      state.v.emplace_back(p->shape, 0.0);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    const Tensor& g = grads[k];
    for (std::size_t i = 0; i < p.numel(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p[i] *= 1.0 - lr * cfg.weight_decay;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
  return true;
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::stage1: return "stage1";
    case TrainMode::stage2: return "stage2";
    case TrainMode::direct: return "direct";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& text) {
  if (text == "stage1" || text == "1") return TrainMode::stage1;
  if (text == "stage2" || text == "2") return TrainMode::stage2;
  if (text == "direct") return TrainMode::direct;
  throw InvalidArgument("unknown training mode '" + text + "'");
}

void TrainConfig::validate() const {
  net.validate();
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(first_decay > 0.0 && first_decay < 1.0 && second_decay > 0.0 && second_decay < 1.0 && first_decay <= second_decay))
    throw InvalidArgument("decay milestones must lie in (0, 1) and be ordered");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw InvalidArgument("decay factor must lie in (0, 1]");
  if (iterations < 1 || batch < 1) throw InvalidArgument("iterations and batch must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.eps > 0.0 &&
        adam.weight_decay >= 0.0))
    throw InvalidArgument("invalid optimizer hyperparameters");
}

double learning_rate_at(const TrainConfig& cfg, int iteration) {
  const double progress = static_cast<double>(iteration) / static_cast<double>(cfg.iterations);
  double lr = cfg.learning_rate;
  if (progress >= cfg.first_decay) lr *= cfg.decay_factor;
  if (progress >= cfg.second_decay) lr *= cfg.decay_factor;
  return lr;
}

TrainState start_training(const TrainConfig& cfg, TrainMode mode, const ModelParams* init) {
  cfg.validate();
  if (mode == TrainMode::stage2 && !init) throw InvalidArgument("stage 2 needs stage-1 parameters");
  TrainState s;
  s.config = cfg;
  s.mode = mode;
  if (init) {
    if (!(init->config() == cfg.net)) throw InvalidArgument("initial parameters do not match the network config");
    s.params = *init;
  } else {
    s.params = ModelParams::initialize(cfg.net, cfg.seed);
  }
  return s;
}

namespace {

struct Draw {
  std::size_t index;
  bool inverse;
};

std::vector<Draw> draw_iteration(const TrainConfig& cfg, TrainMode mode, int iteration, std::size_t dataset_size) {
  Rng rng = Rng::derive(mix_seed(cfg.seed, static_cast<std::uint64_t>(mode) + 1), static_cast<std::uint64_t>(iteration));
  std::vector<Draw> draws;
  for (int b = 0; b < cfg.batch; ++b) {
    const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(dataset_size) - 1));
    const bool inverse = mode == TrainMode::stage1 && rng.bernoulli(0.5);
    draws.push_back({idx, inverse});
  }
  return draws;
}

void add_terms(LossRecord& rec, const LossTerms& t, double total) {
  rec.l1 += t.l1;
  rec.l2 += t.l2;
  rec.grad += t.grad;
  rec.total += total;
}

}  // namespace

Var iteration_loss(Tape& tape, const ModelParams& params, const std::vector<Var>& vars, TrainMode mode,
                   const TrainingSample& sample, bool use_inverse_mask, LossRecord& losses) {
  Var root;
  if (mode == TrainMode::stage1) {
    const Mask m = use_inverse_mask ? sample.mask.inverse() : sample.mask;
    const DepthMap& target = use_inverse_mask ? sample.layer2 : sample.layer1;
    const Var pred = forward(tape, params, vars, sample.depth, sample.rgb, m);
    const LossTerms t = composite_loss(tape, pred, tape.constant(to_tensor(target)));
    root = t.total;
    add_terms(losses, t, tape.value(root)[0]);
  } else if (mode == TrainMode::stage2) {
    const Var p1 = forward(tape, params, vars, sample.perturbed, sample.rgb, sample.mask);
    const Var p2 = forward(tape, params, vars, sample.perturbed, sample.rgb, sample.mask.inverse());
    Tensor alpha({1, sample.mask.height(), sample.mask.width()});
    for (std::size_t i = 0; i < alpha.numel(); ++i) alpha[i] = sample.mask.alpha()[i];
    const Var merged = blend(tape, p1, p2, alpha);
    const LossTerms t1 = composite_loss(tape, p1, tape.constant(to_tensor(sample.layer1)));
    const LossTerms t2 = composite_loss(tape, p2, tape.constant(to_tensor(sample.layer2)));
    const LossTerms t3 = composite_loss(tape, merged, tape.constant(to_tensor(sample.depth)));
    root = sum(tape, {t1.total, t2.total, t3.total});
    add_terms(losses, t1, 0.0);
    add_terms(losses, t2, 0.0);
    add_terms(losses, t3, tape.value(root)[0]);
  } else {
    const Var pred = forward(tape, params, vars, sample.perturbed, sample.rgb, sample.mask);
    const LossTerms t = composite_loss(tape, pred, tape.constant(to_tensor(sample.depth)));
    root = t.total;
    add_terms(losses, t, tape.value(root)[0]);
  }
  return root;
}

IterationResult iteration_gradients(const ModelParams& params, TrainMode mode, const TrainingSample& sample,
                                    bool use_inverse_mask) {
  Tape tape;
  const auto vars = bind(tape, params);
  IterationResult res;
  const Var root = iteration_loss(tape, params, vars, mode, sample, use_inverse_mask, res.losses);
  tape.backward(root);
  for (Var v : vars) res.grads.push_back(tape.has_grad(v) ? tape.grad(v) : Tensor(tape.value(v).shape, 0.0));
  return res;
}

void train(TrainState& state, const std::vector<TrainingSample>& dataset, int until, const IterationCallback& on_iteration,
           int workers) {
  if (dataset.empty()) throw DataError("training dataset is empty");
  state.config.validate();
  const Size size = dataset.front().depth.size();
  for (const auto& sample : dataset)
    if (!(sample.depth.size() == size)) throw DataError("training samples differ in size");
  if (state.sample_size.area() == 0) {
    state.sample_size = size;
  } else if (!(state.sample_size == size)) {
    throw DataError("checkpoint was trained on " + to_string(state.sample_size) + " samples, dataset holds " +
                    to_string(size));
  }
  until = std::min(until, state.config.iterations);
  std::vector<Tensor*> param_ptrs;
  for (auto& nt : state.params.tensors()) param_ptrs.push_back(&nt.value);
  const double inv_batch = 1.0 / static_cast<double>(state.config.batch);

  while (state.iteration < until) {
    const int it = state.iteration;
    LossRecord rec;
    rec.iteration = it;
    const auto draws = draw_iteration(state.config, state.mode, it, dataset.size());
    std::vector<IterationResult> results(draws.size());
    parallel_for(draws.size(), workers, [&](std::size_t b) {
      results[b] = iteration_gradients(state.params, state.mode, dataset[draws[b].index], draws[b].inverse);
    });
    std::vector<Tensor> grads;
    for (IterationResult& r : results) {
      if (grads.empty()) {
        grads = std::move(r.grads);
      } else {
        for (std::size_t k = 0; k < grads.size(); ++k)
          for (std::size_t i = 0; i < grads[k].numel(); ++i) grads[k][i] += r.grads[k][i];
      }
      rec.l1 += r.losses.l1 * inv_batch;
      rec.l2 += r.losses.l2 * inv_batch;
      rec.grad += r.losses.grad * inv_batch;
      rec.total += r.losses.total * inv_batch;
    }
    for (auto& g : grads)
      for (double& v : g.data) v *= inv_batch;
    if (!adamw_step(param_ptrs, grads, state.optimizer, state.config.adam, learning_rate_at(state.config, it)))
      spdlog::warn("iteration {}: non-finite gradient, update skipped ({} so far)", it, state.optimizer.skipped);
    state.log.push_back(rec);
    ++state.iteration;
    if (on_iteration) on_iteration(state);
  }
}

namespace {

TrainResult run(const TrainConfig& cfg, TrainMode mode, const std::vector<TrainingSample>& dataset,
                const ModelParams* init) {
  TrainState s = start_training(cfg, mode, init);
  train(s, dataset, cfg.iterations);
  return {std::move(s.params), std::move(s.log), s.optimizer.skipped};
}

}  // namespace

TrainResult train_stage1(const TrainConfig& cfg, const std::vector<TrainingSample>& dataset) {
  return run(cfg, TrainMode::stage1, dataset, nullptr);
}

TrainResult train_stage2(const TrainConfig& cfg, const std::vector<TrainingSample>& dataset, const ModelParams& init) {
  return run(cfg, TrainMode::stage2, dataset, &init);
}

TrainResult train_direct(const TrainConfig& cfg, const std::vector<TrainingSample>& dataset) {
  return run(cfg, TrainMode::direct, dataset, nullptr);
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& log) {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,l1,l2,grad,total\n";
  for (const auto& r : log) os << r.iteration << ',' << r.l1 << ',' << r.l2 << ',' << r.grad << ',' << r.total << '\n';
  write_file_atomic(path, os.str());
}

DepthMap ToyNetBackend::refine_layer(const DepthMap& perturbed, const RgbImage& rgb, const Mask& mask) const {
  return predict(params_, perturbed, rgb, mask);
}

std::unique_ptr<RefinerBackend> export_backend(const ModelParams& params) {
  return std::make_unique<ToyNetBackend>(params);
}

}  // namespace depthlayers::nn
