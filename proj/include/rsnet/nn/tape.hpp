#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "rsnet/nn/tensor.hpp"

namespace rsnet::nn {

/// A trainable tensor. `grad` accumulates across backward passes until
/// zero_grad() is called.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)) {}
  void zero_grad() { grad = Tensor::zeros_like(value); }
};

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  int dim(std::size_t i) const { return value().dim(i); }
};

/// Records operations in execution order; backward() walks them in reverse,
/// which is a valid reverse topological order since every node is appended
/// after its parents.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(Parameter& param);
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn fn);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  /// Gradient of the last backward() target w.r.t. node `id`; zeros if the
  /// node received no gradient.
  Tensor grad(std::size_t id) const;
  Tensor grad(Var v) const { return grad(v.id); }

  /// Accumulation buffer for a node's gradient, zero-initialized on first use.
  Tensor& grad_accum(std::size_t id);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one value.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  /// Node ids in the order the last backward() visited them.
  const std::vector<std::size_t>& last_backward_order() const { return visited_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };
  Var push(Tensor value, bool requires_grad, BackwardFn fn);

  std::vector<Node> nodes_;
  std::vector<std::size_t> visited_;
};

}  // namespace rsnet::nn
