#include "rsnet/pipeline/bench.hpp"

#include <chrono>
#include <stdexcept>

#include "rsnet/pipeline/inference.hpp"

namespace rsnet::pipeline {

namespace {

double now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

}  // namespace

InferenceBenchmark benchmark_inference(const std::vector<nn::Tensor>& frames,
                                       const std::vector<const model::RsNetModel*>& models,
                                       const SegmentOptions& options,
                                       std::vector<std::vector<model::TaskOutput>>* predictions) {
  for (const auto* m : models) {
    if (!m) throw std::invalid_argument("benchmark_inference: null model");
  }
  InferenceBenchmark b;
  if (predictions) predictions->clear();
  if (frames.empty() || models.empty()) return b;

  std::vector<nn::Tensor> first_patches;
  const double t0 = now();
  for (const auto& frame : frames) {
    const Segmentation seg = segment_patches(frame, options);
    b.patches += static_cast<int>(seg.patches.size());
    if (first_patches.empty()) first_patches = seg.patches;
    for (const auto* m : models) {
      auto out = predict_patches(*m, seg.patches);
      if (predictions) predictions->push_back(std::move(out));
    }
  }
  b.seconds = now() - t0;
  b.frames = static_cast<int>(frames.size());
  b.frames_per_second = b.seconds > 0.0 ? b.frames / b.seconds : 0.0;
  b.patches_per_second = b.seconds > 0.0 ? b.patches / b.seconds : 0.0;
  const double evaluations = static_cast<double>(b.patches) * models.size();
  b.seconds_per_patch = evaluations > 0.0 ? b.seconds / evaluations : 0.0;

  if (!first_patches.empty()) {
    constexpr int kReps = 5;
    const double t1 = now();
    for (int k = 0; k < kReps; ++k) {
      for (const auto* m : models) m->predict(first_patches[0]);
    }
    b.batch1_seconds_per_patch = (now() - t1) / (kReps * static_cast<double>(models.size()));
    b.overhead_ratio = b.batch1_seconds_per_patch > 0.0 ? b.seconds_per_patch / b.batch1_seconds_per_patch : 0.0;
  }
  return b;
}

}  // namespace rsnet::pipeline
