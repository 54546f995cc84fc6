#include "rsnet/pipeline/inference.hpp"

#include <algorithm>
#include <exception>
#include <stdexcept>
#include <string>

#include "rsnet/synth/materials.hpp"

namespace rsnet::pipeline {

void require_head(const model::RsNetModel& model, model::HeadKind kind, const char* who) {
  if (!model.head || model.head->config().kind != kind) {
    const char* what = kind == model::HeadKind::regression ? "friction regression" : "classification";
    throw std::invalid_argument(std::string(who) + ": the model needs a " + what + " head");
  }
}

std::vector<model::TaskOutput> predict_patches(const model::RsNetModel& model, const std::vector<nn::Tensor>& patches) {
  std::vector<model::TaskOutput> out(patches.size());
  std::vector<std::exception_ptr> errors(patches.size());
  const long n = static_cast<long>(patches.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = model.predict(patches[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

double min_friction(const std::vector<double>& estimates) {
  if (estimates.empty()) throw std::invalid_argument("min_friction: need at least one patch");
  const double m = *std::min_element(estimates.begin(), estimates.end());
  return std::clamp(m, synth::kMinFriction, synth::kMaxFriction);
}

double min_friction(const std::vector<nn::Tensor>& patches, const model::RsNetModel& model) {
  require_head(model, model::HeadKind::regression, "min_friction");
  if (patches.empty()) throw std::invalid_argument("min_friction: need at least one patch");
  std::vector<double> mu;
  for (const auto& o : predict_patches(model, patches)) mu.push_back(o.friction);
  return min_friction(mu);
}

FrictionEstimate estimate_friction(const nn::Tensor& image, const model::RsNetModel& model,
                                   const SegmentOptions& options) {
  require_head(model, model::HeadKind::regression, "estimate_friction");
  const Segmentation seg = segment_patches(image, options);
  if (seg.patches.empty()) throw std::runtime_error("estimate_friction: segmentation produced no patch");
  FrictionEstimate e;
  e.regions = static_cast<int>(seg.regions.size());
  for (const auto& o : predict_patches(model, seg.patches)) e.per_patch.push_back(o.friction);
  e.mu_hat = min_friction(e.per_patch);
  return e;
}

double controller_friction(double mu_hat, double safety) {
  if (!(safety > 0.0 && safety <= 1.0)) throw std::invalid_argument("controller_friction: safety must lie in (0, 1]");
  return std::clamp(safety * mu_hat, synth::kMinFriction, synth::kMaxFriction);
}

}  // namespace rsnet::pipeline
