#pragma once

// Central finite-difference checks for the autodiff tape and the toy network.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "depthlayers/core/random.hpp"
#include "depthlayers/toynet/ops.hpp"
#include "depthlayers/toynet/train.hpp"

namespace depthlayers::testing {

inline constexpr double kFdStep = 1e-3;
inline constexpr double kFdRelTol = 1e-4;

inline nn::Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  nn::Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

inline double l2_norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// ||a - b|| / max(||a||, ||b||), zero when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double scale = std::max(l2_norm(a), l2_norm(b));
  return scale == 0.0 ? 0.0 : l2_norm(d) / scale;
}

using ScalarFn = std::function<nn::Var(nn::Tape&, const std::vector<nn::Var>&)>;

/// Relative error of the tape gradient against central differences, one entry per input.
inline std::vector<double> gradient_errors(const ScalarFn& f, const std::vector<nn::Tensor>& inputs) {
  nn::Tape tape;
  std::vector<nn::Var> vars;
  for (const auto& x : inputs) vars.push_back(tape.variable(x));
  tape.backward(f(tape, vars));
  std::vector<double> errors;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<double> analytic = tape.grad(vars[k]).data, numeric(inputs[k].numel());
    for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
      auto eval = [&](double delta) {
        auto shifted = inputs;
        shifted[k][i] += delta;
        nn::Tape t2(false);
        std::vector<nn::Var> v2;
        for (const auto& x : shifted) v2.push_back(t2.variable(x));
        return t2.value(f(t2, v2))[0];
      };
      numeric[i] = (eval(kFdStep) - eval(-kFdStep)) / (2 * kFdStep);
    }
    errors.push_back(relative_error(analytic, numeric));
  }
  return errors;
}

/// Reduces any op output to a smooth scalar.
inline nn::Var squared_distance(nn::Tape& t, nn::Var out, std::uint64_t seed) {
  Rng rng(seed);
  return nn::mean_square(t, nn::sub(t, out, t.constant(random_tensor(t.value(out).shape, rng))));
}

struct GroupError {
  std::string name;
  double error = 0.0;
};

/// Checks the composite training loss of one sample against central differences for
/// every parameter tensor. The shifted evaluations replay the base point's branch
/// decisions so that the finite difference stays on one linear piece.
/// `loss_matches` reports whether the replayed loss reproduces the recorded one.
inline std::vector<GroupError> model_gradient_errors(const nn::ModelParams& params, const TrainingSample& s,
                                                     nn::TrainMode mode, bool* loss_matches = nullptr) {
  nn::Tape base;
  base.log_branches(true);
  const auto base_vars = nn::bind(base, params);
  nn::LossRecord rec;
  base.backward(nn::iteration_loss(base, params, base_vars, mode, s, false, rec));
  const std::vector<std::int8_t> pattern = base.branch_log();

  auto loss_at = [&](const nn::ModelParams& p) {
    nn::Tape t(false);
    t.replay_branches(pattern);
    nn::LossRecord r;
    return t.value(nn::iteration_loss(t, p, nn::bind(t, p), mode, s, false, r))[0];
  };
  if (loss_matches) *loss_matches = loss_at(params) == rec.total;

  std::vector<GroupError> out;
  for (std::size_t k = 0; k < params.tensors().size(); ++k) {
    const auto& nt = params.tensors()[k];
    std::vector<double> numeric(nt.value.numel());
    for (std::size_t i = 0; i < nt.value.numel(); ++i) {
      nn::ModelParams up = params, down = params;
      up.tensors()[k].value[i] += kFdStep;
      down.tensors()[k].value[i] -= kFdStep;
      numeric[i] = (loss_at(up) - loss_at(down)) / (2 * kFdStep);
    }
    out.push_back({nt.name, relative_error(base.grad(base_vars[k]).data, numeric)});
  }
  return out;
}

}  // namespace depthlayers::testing
