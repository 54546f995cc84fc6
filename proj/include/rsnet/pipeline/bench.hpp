#pragma once

#include <vector>

#include "rsnet/model/rsnet.hpp"
#include "rsnet/pipeline/segment.hpp"

namespace rsnet::pipeline {

struct InferenceBenchmark {
  int frames = 0;
  int patches = 0;
  double seconds = 0.0;  // wall time of the full segment -> predict loop
  double frames_per_second = 0.0;
  double patches_per_second = 0.0;
  double seconds_per_patch = 0.0;         // full pipeline time per patch and model
  double batch1_seconds_per_patch = 0.0;  // a single patch predicted in isolation
  double overhead_ratio = 0.0;            // seconds_per_patch / batch1_seconds_per_patch
};

/// Times segment -> predict over every frame with every model. Predictions
/// per frame, patch and model are returned through `predictions` when given.
/// No frames gives an all-zero report.
InferenceBenchmark benchmark_inference(const std::vector<nn::Tensor>& frames,
                                       const std::vector<const model::RsNetModel*>& models,
                                       const SegmentOptions& options,
                                       std::vector<std::vector<model::TaskOutput>>* predictions = nullptr);

}  // namespace rsnet::pipeline
