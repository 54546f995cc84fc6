#include "rsnet/pipeline/workflow.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "rsnet/pipeline/scene.hpp"
#include "rsnet/util/csv.hpp"
#include "rsnet/util/rng.hpp"

namespace rsnet::pipeline {

namespace {

int peak(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

model::TrainOptions options(const TrainSettings& t, int epochs, std::uint64_t seed) {
  model::TrainOptions o;
  o.epochs = epochs;
  o.batch_size = t.batch_size;
  o.learning_rate = t.learning_rate;
  o.seed = seed;
  return o;
}

}  // namespace

synth::Dataset make_dataset(const PipelineConfig& config) {
  return synth::gen_dataset(config.classes, config.grid, config.response(), config.data, config.seed);
}

TrainedModels train_models(const PipelineConfig& config, const std::vector<synth::TrainingSample>& train) {
  if (train.empty()) throw std::invalid_argument("train_models: no training samples");
  const auto& t = config.train;
  const std::uint64_t s = config.seed;
  const int classes = static_cast<int>(config.training_class_names().size());

  model::RsNet net(config.model, mix_seed(s, 1));
  auto pretrain_log = model::pretrain_spectral(net, train, options(t, t.pretrain_epochs, mix_seed(s, 2)));

  model::RsNet cnet = net;
  model::TaskHead chead(model::HeadConfig::classifier(config.model, classes), config.model.spectral_bands,
                        mix_seed(s, 3));
  auto classifier_log =
      model::finetune_joint(cnet, chead, train, t.alpha, options(t, t.finetune_epochs, mix_seed(s, 4)));

  model::RsNet fnet = net;
  model::TaskHead fhead(model::HeadConfig::friction(config.model), config.model.spectral_bands, mix_seed(s, 5));
  auto friction_log = model::finetune_joint(fnet, fhead, train, t.alpha, options(t, t.finetune_epochs, mix_seed(s, 6)));

  return TrainedModels{model::RsNetModel{std::move(net), std::nullopt},
                       model::RsNetModel{std::move(cnet), std::move(chead)},
                       model::RsNetModel{std::move(fnet), std::move(fhead)},
                       std::move(pretrain_log),
                       std::move(classifier_log),
                       std::move(friction_log)};
}

std::vector<SpectralRow> spectral_rows(const model::RsNet& net, const std::vector<synth::TrainingSample>& data,
                                       const std::string& split) {
  std::vector<SpectralRow> rows(data.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    const auto pred = net.predict_spectrum(s.rgb_patch);
    double mse = 0.0;
    for (std::size_t b = 0; b < pred.size(); ++b) mse += (pred[b] - s.spectrum[b]) * (pred[b] - s.spectrum[b]);
    rows[i] = {split, s.id, s.class_name, model::pearson(pred, s.spectrum), mse / static_cast<double>(pred.size()),
               peak(s.spectrum), peak(pred)};
  }
  return rows;
}

void write_spectral_csv(const std::filesystem::path& path, const std::vector<SpectralRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "split,id,class,pearson,mse,peak_true,peak_pred\n";
  for (const auto& r : rows) {
    out << csv::join({r.split, r.id, r.class_name, csv::num(r.pearson), csv::num(r.mse), std::to_string(r.peak_true),
                      std::to_string(r.peak_pred)})
        << '\n';
  }
}

std::vector<ClassMeanSpectrum> class_mean_spectra(const model::RsNet& net,
                                                  const std::vector<synth::TrainingSample>& data) {
  std::vector<SpectralSignature> preds(data.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < data.size(); ++i) preds[i] = net.predict_spectrum(data[i].rgb_patch);

  std::vector<ClassMeanSpectrum> out;
  std::map<std::string, std::size_t> index;
  std::vector<int> counts;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto [it, fresh] = index.try_emplace(data[i].class_name, out.size());
    if (fresh) {
      out.push_back({data[i].class_name, SpectralSignature(preds[i].size(), 0.0),
                     SpectralSignature(data[i].spectrum.size(), 0.0)});
      counts.push_back(0);
    }
    auto& m = out[it->second];
    for (std::size_t b = 0; b < preds[i].size(); ++b) m.predicted[b] += preds[i][b];
    for (std::size_t b = 0; b < data[i].spectrum.size(); ++b) m.truth[b] += data[i].spectrum[b];
    ++counts[it->second];
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (auto& v : out[k].predicted) v /= counts[k];
    for (auto& v : out[k].truth) v /= counts[k];
    out[k].peak_pred = peak(out[k].predicted);
    out[k].peak_true = peak(out[k].truth);
  }
  return out;
}

std::vector<nn::Tensor> bench_frames(const PipelineConfig& config) {
  const auto r = config.response();
  std::vector<nn::Tensor> frames;
  for (int i = 0; i < config.bench.frames; ++i) {
    frames.push_back(render_tiles(config.bench.layout, config.bench.tile_px, config.classes, config.grid, r,
                                  mix_seed(config.seed, 0xbe7c0 + static_cast<std::uint64_t>(i)))
                         .rgb);
  }
  return frames;
}

}  // namespace rsnet::pipeline
