#include "rsnet/model/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "rsnet/nn/ops.hpp"
#include "rsnet/nn/optim.hpp"
#include "rsnet/util/csv.hpp"
#include "rsnet/util/rng.hpp"

namespace rsnet::model {

using nn::Tape;
using nn::Tensor;
using nn::Var;

namespace {

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  return idx;
}

Tensor target_tensor(const synth::TrainingSample& s, int bands) {
  if (static_cast<int>(s.spectrum.size()) != bands) {
    throw nn::ShapeError("sample " + s.id + ": spectrum has " + std::to_string(s.spectrum.size()) +
                         " bands, model expects " + std::to_string(bands));
  }
  return Tensor({bands}, s.spectrum);
}

TrainingLog run_training(RsNet& model, TaskHead* head, const std::vector<synth::TrainingSample>& data, double alpha,
                         const TrainOptions& opt) {
  if (data.empty()) throw std::invalid_argument("training: empty dataset");
  if (opt.epochs < 0 || opt.batch_size < 1) throw std::invalid_argument("training: bad epoch or batch settings");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("training: alpha must be in [0, 1]");
  if (!(opt.learning_rate >= 0.0)) throw std::invalid_argument("training: learning rate must be >= 0");
  const int bands = model.config().spectral_bands;
  if (head && head->spectral_bands() != bands) throw nn::ShapeError("training: head and backbone band counts differ");
  const bool classify = head && head->config().kind == HeadKind::classification;
  if (classify) {
    for (const auto& s : data) {
      if (s.class_label < 0 || s.class_label >= head->config().outputs) {
        throw std::invalid_argument("training: sample " + s.id + " has no valid class label");
      }
    }
  }

  std::vector<nn::Parameter*> params = model.parameter_ptrs();
  if (head) {
    for (auto* p : head->parameter_ptrs()) params.push_back(p);
  }
  nn::AdamState adam;
  adam.learning_rate = opt.learning_rate;

  TrainingLog log;
  std::uint64_t step = 0;
  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    const auto order = shuffled(data.size(), mix_seed(opt.seed, static_cast<std::uint64_t>(epoch)));
    double spec_sum = 0.0, task_sum = 0.0, comb_sum = 0.0, metric_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
      Tape tape;
      std::vector<Var> losses;
      for (std::size_t b = start; b < end; ++b) {
        const auto& s = data[order[b]];
        const auto trace = model.forward(tape, s.rgb_patch);
        const Var target = tape.constant(target_tensor(s, bands));
        const Var spec = nn::mse_loss(trace.spectrum, target);
        spec_sum += spec.value()[0];
        if (!head) {
          losses.push_back(spec);
          double mae = 0.0;
          for (int k = 0; k < bands; ++k) mae += std::abs(trace.spectrum.value()[k] - s.spectrum[k]);
          metric_sum += mae / bands;
          comb_sum += spec.value()[0];
          continue;
        }
        const Var out = head->forward(tape, trace.spectrum, ForwardMode{true, mix_seed(mix_seed(opt.seed, step), b)});
        Var task;
        if (classify) {
          task = nn::cross_entropy(out, s.class_label);
          const auto p = out.value().data();
          const int pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
          metric_sum += pred == s.class_label ? 1.0 : 0.0;
        } else {
          task = nn::l1_loss(out, tape.constant(Tensor::scalar(s.friction)));
          metric_sum += std::abs(out.value()[0] - s.friction);
        }
        const Var comb = nn::combined_loss(task, spec, alpha);
        task_sum += task.value()[0];
        comb_sum += comb.value()[0];
        losses.push_back(comb);
      }
      const Var loss = nn::mean(losses);
      nn::zero_grads(params);
      tape.backward(loss);
      nn::adam_step(params, adam);
      log.step_losses.push_back(loss.value()[0]);
      ++step;
    }
    const double n = static_cast<double>(data.size());
    log.epochs.push_back({epoch, spec_sum / n, task_sum / n, comb_sum / n, metric_sum / n});
  }
  return log;
}

}  // namespace

TrainingLog pretrain_spectral(RsNet& model, const std::vector<synth::TrainingSample>& data, const TrainOptions& options) {
  return run_training(model, nullptr, data, 0.0, options);
}

TrainingLog finetune_joint(RsNet& model, TaskHead& head, const std::vector<synth::TrainingSample>& data, double alpha,
                           const TrainOptions& options) {
  return run_training(model, &head, data, alpha, options);
}

void write_training_log(const TrainingLog& log, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "epoch,spec_loss,task_loss,combined_loss,accuracy_or_mae\n";
  for (const auto& e : log.epochs) {
    os << csv::join({std::to_string(e.epoch), csv::num(e.spec_loss), csv::num(e.task_loss), csv::num(e.combined_loss),
                     csv::num(e.accuracy_or_mae)})
       << "\n";
  }
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: need two equal-length series");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

EvalSummary evaluate(const RsNetModel& model, const std::vector<synth::TrainingSample>& data) {
  EvalSummary r;
  if (data.empty()) return r;
  r.min_pearson = 1.0;
  std::size_t labelled = 0;
  for (const auto& s : data) {
    Tape tape;
    const auto trace = model.backbone.forward_const(tape, s.rgb_patch);
    const auto v = trace.spectrum.value().data();
    const std::vector<double> pred(v.begin(), v.end());
    double se = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) se += (pred[k] - s.spectrum.at(k)) * (pred[k] - s.spectrum[k]);
    r.spec_mse += se / static_cast<double>(pred.size());
    const double rho = pearson(pred, s.spectrum);
    r.mean_pearson += rho;
    r.min_pearson = std::min(r.min_pearson, rho);
    if (model.head) {
      const Tensor out = model.head->forward_const(tape, trace.spectrum).value();
      if (model.head->config().kind == HeadKind::classification) {
        if (s.class_label >= 0) {
          const auto p = out.data();
          r.accuracy += (std::max_element(p.begin(), p.end()) - p.begin()) == s.class_label ? 1.0 : 0.0;
          ++labelled;
        }
      } else {
        r.friction_mae += std::abs(out[0] - s.friction);
      }
    }
  }
  r.samples = data.size();
  const double n = static_cast<double>(data.size());
  r.spec_mse /= n;
  r.mean_pearson /= n;
  r.friction_mae /= n;
  if (labelled) r.accuracy /= static_cast<double>(labelled);
  return r;
}

}  // namespace rsnet::model
