#pragma once

#include <vector>

#include "rsnet/model/rsnet.hpp"
#include "rsnet/pipeline/segment.hpp"

namespace rsnet::pipeline {

/// Task outputs for every patch, in patch order (OpenMP over patches).
std::vector<model::TaskOutput> predict_patches(const model::RsNetModel& model, const std::vector<nn::Tensor>& patches);

/// Smallest estimate, clamped to [kMinFriction, kMaxFriction]. Throws
/// std::invalid_argument on an empty list.
double min_friction(const std::vector<double>& estimates);
/// Same over the friction regressor's per-patch outputs.
double min_friction(const std::vector<nn::Tensor>& patches, const model::RsNetModel& model);

struct FrictionEstimate {
  double mu_hat = 0.0;
  std::vector<double> per_patch;
  int regions = 0;
};

/// Segment, then min friction over the patches. Throws std::runtime_error
/// when segmentation yields no patch.
FrictionEstimate estimate_friction(const nn::Tensor& image, const model::RsNetModel& model,
                                   const SegmentOptions& options);

/// Friction the controller plans with: safety * mu_hat, kept inside the
/// controller's admissible range.
double controller_friction(double mu_hat, double safety);

/// Throws std::invalid_argument unless the model carries a head of `kind`.
void require_head(const model::RsNetModel& model, model::HeadKind kind, const char* who);

}  // namespace rsnet::pipeline
