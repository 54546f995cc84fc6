#include "rsnet/nn/tape.hpp"

namespace rsnet::nn {

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::push(Tensor value, bool requires_grad, BackwardFn fn) {
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(fn), requires_grad});
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(Parameter& param) {
  Parameter* p = &param;
  if (p->grad.shape() != p->value.shape()) p->zero_grad();
  return push(p->value, true, [p](Tape& tape, std::size_t self) { p->grad.add_inplace(tape.nodes_[self].grad); });
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
  bool rg = false;
  for (const Var& v : parents) rg = rg || nodes_.at(v.id).requires_grad;
  return push(std::move(value), rg, rg ? std::move(fn) : nullptr);
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackwardFn fn) {
  bool rg = false;
  for (const Var& v : parents) rg = rg || nodes_.at(v.id).requires_grad;
  return push(std::move(value), rg, rg ? std::move(fn) : nullptr);
}

Tensor Tape::grad(std::size_t id) const {
  const Node& n = nodes_.at(id);
  if (n.grad.shape() == n.value.shape()) return n.grad;
  return Tensor::zeros_like(n.value);
}

Tensor& Tape::grad_accum(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.shape() != n.value.shape()) n.grad = Tensor::zeros_like(n.value);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: variable belongs to another tape");
  if (nodes_.at(loss.id).value.size() != 1) {
    throw ShapeError("backward: loss must be a single value, got " + shape_str(nodes_[loss.id].value.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor{};
  visited_.clear();
  grad_accum(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.backward) continue;
    visited_.push_back(i);
    n.backward(*this, i);
  }
}

}  // namespace rsnet::nn
