#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rsnet/model/rsnet.hpp"
#include "rsnet/synth/dataset.hpp"

namespace rsnet::model {

struct TrainOptions {
  int epochs = 20;
  int batch_size = 8;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

/// One row of the training log. During pretraining task_loss is 0,
/// combined_loss equals spec_loss and accuracy_or_mae is the mean absolute
/// spectral error.
struct EpochLog {
  int epoch = 0;
  double spec_loss = 0.0;
  double task_loss = 0.0;
  double combined_loss = 0.0;
  double accuracy_or_mae = 0.0;
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  std::vector<double> step_losses;  // combined loss of every optimizer step
};

/// MSE between predicted and true spectra, Adam on the backbone.
TrainingLog pretrain_spectral(RsNet& model, const std::vector<synth::TrainingSample>& data, const TrainOptions& options);

/// alpha * L_task + (1 - alpha) * L_spec, optimized end-to-end over backbone
/// and head. L_task is cross-entropy (classification) or L1 on friction.
TrainingLog finetune_joint(RsNet& model, TaskHead& head, const std::vector<synth::TrainingSample>& data, double alpha,
                           const TrainOptions& options);

void write_training_log(const TrainingLog& log, const std::filesystem::path& path);

struct EvalSummary {
  double spec_mse = 0.0;
  double mean_pearson = 0.0;
  double min_pearson = 0.0;
  double accuracy = 0.0;      // classification heads
  double friction_mae = 0.0;  // regression heads
  std::size_t samples = 0;
};

double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Spectral metrics over `data`; task metrics too when the model has a head.
/// Samples with class_label < 0 are skipped for accuracy.
EvalSummary evaluate(const RsNetModel& model, const std::vector<synth::TrainingSample>& data);

}  // namespace rsnet::model
