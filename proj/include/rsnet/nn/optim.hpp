#pragma once

#include <cstdint>
#include <vector>

#include "rsnet/nn/tape.hpp"

namespace rsnet::nn {

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::int64_t step = 0;
};

/// Bias-corrected Adam update of `params` from their accumulated `grad`.
/// Moment buffers are created on the first call; later calls must pass
/// parameters of the same shapes in the same order.
void adam_step(const std::vector<Parameter*>& params, AdamState& state);

/// Same update on raw tensors, for callers that keep gradients separately.
void adam_step(std::vector<Tensor*> params, const std::vector<const Tensor*>& grads, AdamState& state);

void zero_grads(const std::vector<Parameter*>& params);

/// He/Kaiming normal initialization: N(0, 2/fan_in).
Tensor kaiming_normal(Shape shape, int fan_in, std::uint64_t seed);

}  // namespace rsnet::nn
