#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rsnet/nn/tape.hpp"
#include "rsnet/synth/spectra.hpp"

namespace rsnet::model {

struct RsNetConfig {
  int input_size = 32;
  int stem_channels = 8;
  int stem_stride = 1;
  int growth_rate = 4;
  int block1_layers = 6;
  int block2_layers = 12;
  int transition_channels = 16;
  int reduce1_channels = 16;
  int reduce2_channels = 9;
  int spectral_bands = 64;
  std::vector<int> head_dims{64, 32};
  double head_dropout = 0.1;
  double alpha = 0.7;

  /// Desk-scale defaults (32 px input, 64 bands).
  static RsNetConfig desk();
  /// Widths of the full-size network: 64 px input, 1550 bands, head
  /// 1550 -> 512 -> 128 -> K.
  static RsNetConfig full();

  void validate() const;
  /// Spatial size after the stem, after block 1 and after block 2.
  int stem_out_size() const;
  int block2_size() const;
  int block1_out_channels() const { return stem_channels + block1_layers * growth_rate; }
  int block2_out_channels() const { return transition_channels + block2_layers * growth_rate; }
  int fused_channels() const { return transition_channels + block2_out_channels(); }
  int flat_features() const;

  nlohmann::json to_json() const;
  static RsNetConfig from_json(const nlohmann::json& j);
  bool operator==(const RsNetConfig&) const = default;
};

/// Intermediate nodes of one backbone pass.
struct ForwardTrace {
  nn::Var x7;   // block-1 output
  nn::Var x8;   // first transition output
  nn::Var x21;  // block-2 output
  nn::Var fused;
  nn::Var spectrum;
};

struct ForwardMode {
  bool training = false;
  std::uint64_t dropout_seed = 0;
};

/// Maps a parameter index to a tape node; lets the same graph code run with
/// trainable parameters or with read-only constants.
using ParamBinder = std::function<nn::Var(std::size_t)>;

/// RGB patch [3, S, S] -> non-negative spectrum [B_s].
class RsNet {
 public:
  explicit RsNet(RsNetConfig config, std::uint64_t seed = 0);

  const RsNetConfig& config() const { return config_; }
  std::vector<nn::Parameter>& parameters() { return params_; }
  const std::vector<nn::Parameter>& parameters() const { return params_; }
  std::vector<nn::Parameter*> parameter_ptrs();
  std::size_t parameter_count() const;

  /// Trainable pass: parameters are bound as tape leaves.
  ForwardTrace forward(nn::Tape& tape, const nn::Tensor& patch);
  /// Read-only pass; safe to call concurrently.
  ForwardTrace forward_const(nn::Tape& tape, const nn::Tensor& patch) const;
  SpectralSignature predict_spectrum(const nn::Tensor& patch) const;

 private:
  ForwardTrace build(nn::Tape& tape, const nn::Tensor& patch, const ParamBinder& bind) const;
  std::size_t add_param(const std::string& name, nn::Tensor value);

  RsNetConfig config_;
  std::vector<nn::Parameter> params_;
};

/// Forward-spectral entry point: validates the patch and returns x'_s.
SpectralSignature forward_spectral(const RsNet& model, const nn::Tensor& patch);

enum class HeadKind { classification, regression };

struct HeadConfig {
  HeadKind kind = HeadKind::classification;
  int outputs = 6;  // K for classification, 1 for regression
  std::vector<int> hidden{64, 32};
  double dropout = 0.1;

  static HeadConfig classifier(const RsNetConfig& net, int classes);
  static HeadConfig friction(const RsNetConfig& net);
  nlohmann::json to_json() const;
  static HeadConfig from_json(const nlohmann::json& j);
  bool operator==(const HeadConfig&) const = default;
};

/// Friction predictions are squashed into [kMinFriction, kMaxFriction].
struct TaskOutput {
  std::vector<double> probabilities;  // classification
  double friction = 0.0;              // regression
  int argmax() const;
};

/// MLP B_s -> h1 -> h2 -> K with GELU and dropout between layers; softmax
/// for classification, 0.05 + 0.95 * sigmoid for friction.
class TaskHead {
 public:
  TaskHead(HeadConfig config, int spectral_bands, std::uint64_t seed = 0);

  const HeadConfig& config() const { return config_; }
  int spectral_bands() const { return bands_; }
  std::vector<nn::Parameter>& parameters() { return params_; }
  const std::vector<nn::Parameter>& parameters() const { return params_; }
  std::vector<nn::Parameter*> parameter_ptrs();

  nn::Var forward(nn::Tape& tape, nn::Var spectrum, const ForwardMode& mode);
  nn::Var forward_const(nn::Tape& tape, nn::Var spectrum) const;
  TaskOutput predict(const SpectralSignature& spectrum) const;

 private:
  nn::Var build(nn::Tape& tape, nn::Var spectrum, const ForwardMode& mode, const ParamBinder& bind) const;

  HeadConfig config_;
  int bands_;
  std::vector<nn::Parameter> params_;
};

TaskOutput forward_task(const TaskHead& head, const SpectralSignature& spectrum);

/// Backbone plus an optional head; the unit stored in a weight file.
struct RsNetModel {
  RsNet backbone;
  std::optional<TaskHead> head;

  TaskOutput predict(const nn::Tensor& patch) const;
};

}  // namespace rsnet::model
