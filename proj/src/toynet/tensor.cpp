#include "depthlayers/toynet/tensor.hpp"

#include <sstream>

#include "depthlayers/core/error.hpp"

namespace depthlayers::nn {

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int s : shape) {
    if (s < 0) throw InvalidArgument("negative tensor dimension");
    n *= static_cast<std::size_t>(s);
  }
  return n;
}

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)), data(shape_numel(shape), fill) {}

Var Tape::constant(Tensor value) {
  nodes_.push_back({std::move(value), {}, {}, false});
  return Var{nodes_.size() - 1};
}

Var Tape::variable(Tensor value) {
  nodes_.push_back({std::move(value), {}, {}, recording_});
  return Var{nodes_.size() - 1};
}

Tensor& Tape::grad(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.grad.data.empty()) n.grad = Tensor(n.value.shape, 0.0);
  return n.grad;
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackwardFn backward) {
  bool needs = false;
  if (recording_)
    for (Var p : parents) needs = needs || nodes_.at(p.id).requires_grad;
  nodes_.push_back({std::move(value), {}, needs ? std::move(backward) : BackwardFn{}, needs});
  return Var{nodes_.size() - 1};
}

void Tape::backward(Var root) {
  if (!recording_) throw InvalidArgument("backward on a tape that did not record");
  if (consumed_) throw InvalidArgument("backward already ran on this tape");
  if (nodes_.at(root.id).value.numel() != 1) throw InvalidArgument("backward root must hold one element");
  consumed_ = true;
  grad(root)[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.data.empty()) n.backward(*this, i);
  }
}

void Tape::replay_branches(std::vector<std::int8_t> pattern) {
  replay_ = std::move(pattern);
  replay_cursor_ = 0;
  replaying_ = true;
}

std::int8_t Tape::branch(std::int8_t natural) {
  if (replaying_) {
    if (replay_cursor_ >= replay_.size()) throw InvalidArgument("branch replay pattern exhausted");
    return replay_[replay_cursor_++];
  }
  if (log_branches_) branch_log_.push_back(natural);
  return natural;
}

}  // namespace depthlayers::nn
