#pragma once

#include <cstdint>
#include <vector>

#include "rsnet/nn/tape.hpp"

namespace rsnet::nn {

// Differentiable operations recorded on the tape of their first argument.
// Feature maps are [C, H, W]; vectors are [N].

Var conv2d(Var input, Var kernels, int stride, int padding);
Var conv2d(Var input, Var kernels, Var bias, int stride, int padding);

/// Max over window×window cells. Gradient goes to the first maximal cell in
/// row-major scan order.
Var maxpool2d(Var input, int window, int stride);

/// Channel-wise concatenation; `a` occupies the leading channels. An empty
/// tensor (zero elements) acts as the identity.
Var concat_channels(Var a, Var b);
Var concat_channels(const std::vector<Var>& inputs);

/// One dense-block layer: relu(conv3x3(concat(inputs), pad 1) + bias).
Var dense_layer(const std::vector<Var>& inputs, Var kernels, Var bias);

Var relu(Var x);
/// Exact form x * Phi(x) with the Gaussian CDF.
Var gelu(Var x);
Var softplus(Var x);
Var sigmoid(Var x);
Var softmax(Var logits);

/// Inverted dropout: survivors are scaled by 1/(1-rate). Identity when
/// `training` is false or rate is 0.
Var dropout(Var x, double rate, bool training, std::uint64_t seed);

/// weights [out, in] times x [in] plus bias [out].
Var linear(Var x, Var weights, Var bias);

Var flatten(Var x);
Var add(Var a, Var b);
Var scale(Var x, double factor);
/// factor * x + offset, elementwise.
Var affine(Var x, double factor, double offset);
Var sum(Var x);
/// Stacks single-element tensors into a [N] vector.
Var stack(const std::vector<Var>& scalars);
/// Mean of single-element tensors.
Var mean(const std::vector<Var>& scalars);

/// (1/B) ||pred - target||^2.
Var mse_loss(Var pred, Var target);
/// -log(probs[label]); `probs` is expected to come from softmax.
Var cross_entropy(Var probs, int label);
/// (1/N) sum |pred - target|, subgradient 0 at ties.
Var l1_loss(Var pred, Var target);
/// alpha * task + (1 - alpha) * spec.
Var combined_loss(Var task, Var spec, double alpha);

/// Gaussian CDF used by gelu, exposed for tests.
double normal_cdf(double x);

}  // namespace rsnet::nn
