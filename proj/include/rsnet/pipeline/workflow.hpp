#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rsnet/model/train.hpp"
#include "rsnet/pipeline/config.hpp"

namespace rsnet::pipeline {

/// Dataset of the configured classes, grid and seed.
synth::Dataset make_dataset(const PipelineConfig& config);

struct TrainedModels {
  model::RsNetModel backbone;    // spectral pretraining only
  model::RsNetModel classifier;  // joint fine-tune with a class head
  model::RsNetModel friction;    // joint fine-tune with a friction head
  model::TrainingLog pretrain_log, classifier_log, friction_log;
};

/// Pretrain once, then fine-tune a copy per task. Deterministic in config.seed.
TrainedModels train_models(const PipelineConfig& config, const std::vector<synth::TrainingSample>& train);

struct SpectralRow {
  std::string split;
  std::string id;
  std::string class_name;
  double pearson = 0.0;
  double mse = 0.0;
  int peak_true = 0;
  int peak_pred = 0;
};

std::vector<SpectralRow> spectral_rows(const model::RsNet& net, const std::vector<synth::TrainingSample>& data,
                                       const std::string& split);
void write_spectral_csv(const std::filesystem::path& path, const std::vector<SpectralRow>& rows);

/// Per-class mean of predicted and true spectra; peak bands of both means.
struct ClassMeanSpectrum {
  std::string class_name;
  SpectralSignature predicted, truth;
  int peak_pred = 0, peak_true = 0;
};
std::vector<ClassMeanSpectrum> class_mean_spectra(const model::RsNet& net,
                                                  const std::vector<synth::TrainingSample>& data);

/// Frames of the bench layout, one texture seed per frame.
std::vector<nn::Tensor> bench_frames(const PipelineConfig& config);

}  // namespace rsnet::pipeline
