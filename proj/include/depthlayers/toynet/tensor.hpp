#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace depthlayers::nn {

// Dense row-major array of doubles. Feature maps are (channels, height, width);
// convolution kernels are (out, in, kh, kw); biases are (out).
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, double fill = 0.0);

  std::size_t numel() const { return data.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  // (c, y, x) access for rank-3 tensors.
  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * static_cast<std::size_t>(shape[1]) + static_cast<std::size_t>(y)) *
                    static_cast<std::size_t>(shape[2]) +
                static_cast<std::size_t>(x)];
  }
  double at(int c, int y, int x) const { return const_cast<Tensor*>(this)->at(c, y, x); }

  bool operator==(const Tensor&) const = default;
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_string(const std::vector<int>& shape);

struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

class Tape;
using BackwardFn = std::function<void(Tape&, std::size_t self)>;

// Reverse-mode recorder. With recording off, ops compute identical values but
// keep no gradient closures, which is what inference uses.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }

  Var constant(Tensor value);
  Var variable(Tensor value);  // leaf that receives a gradient

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  // Gradient buffer, allocated as zeros on first access.
  Tensor& grad(Var v);
  Tensor& grad(std::size_t id) { return grad(Var{id}); }
  bool has_grad(Var v) const { return !nodes_.at(v.id).grad.data.empty(); }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  // Appends an op result. `backward` runs only if some parent requires a gradient.
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn backward);

  // Seeds d(root)/d(root) = 1 for a one-element root and runs every closure in reverse.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

  // Sign decisions of piecewise-linear ops (leaky rectifier, absolute value) in
  // evaluation order. Replaying a logged pattern evaluates the function on the
  // same linear piece, which is what finite-difference checks need near kinks.
  void log_branches(bool on) { log_branches_ = on; }
  void replay_branches(std::vector<std::int8_t> pattern);
  const std::vector<std::int8_t>& branch_log() const { return branch_log_; }
  std::int8_t branch(std::int8_t natural);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  bool recording_;
  bool consumed_ = false;
  bool log_branches_ = false;
  std::vector<std::int8_t> branch_log_;
  std::vector<std::int8_t> replay_;
  std::size_t replay_cursor_ = 0;
  bool replaying_ = false;
};

}  // namespace depthlayers::nn
