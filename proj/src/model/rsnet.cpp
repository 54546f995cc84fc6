#include "rsnet/model/rsnet.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "rsnet/nn/ops.hpp"
#include "rsnet/nn/optim.hpp"
#include "rsnet/util/rng.hpp"

namespace rsnet::model {

using nn::Parameter;
using nn::Tape;
using nn::Tensor;
using nn::Var;

RsNetConfig RsNetConfig::desk() { return RsNetConfig{}; }

RsNetConfig RsNetConfig::full() {
  RsNetConfig c;
  c.input_size = 64;
  c.stem_channels = 64;
  c.stem_stride = 2;
  c.growth_rate = 32;
  c.transition_channels = 128;
  c.reduce1_channels = 64;
  c.spectral_bands = 1550;
  c.head_dims = {512, 128};
  return c;
}

void RsNetConfig::validate() const {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string("rsnet config: ") + msg);
  };
  need(input_size >= 8, "input_size must be >= 8");
  need(stem_stride == 1 || stem_stride == 2, "stem_stride must be 1 or 2");
  need(stem_channels >= 1 && growth_rate >= 1 && transition_channels >= 1, "channel counts must be positive");
  need(block1_layers >= 1 && block2_layers >= 1, "dense blocks need at least one layer");
  need(reduce1_channels >= 1 && reduce2_channels >= 1, "reduction channels must be positive");
  need(spectral_bands >= 3, "spectral_bands must be >= 3");
  need(!head_dims.empty(), "head_dims must not be empty");
  for (int d : head_dims) need(d >= 1, "head_dims entries must be positive");
  need(head_dropout >= 0.0 && head_dropout < 1.0, "head_dropout must be in [0, 1)");
  need(alpha >= 0.0 && alpha <= 1.0, "alpha must be in [0, 1]");
  need(block2_size() >= 2, "input_size too small for the backbone");
}

int RsNetConfig::stem_out_size() const { return ((input_size - 1) / stem_stride + 1) / 2; }
int RsNetConfig::block2_size() const { return stem_out_size() / 2; }

int RsNetConfig::flat_features() const {
  const int reduced = (block2_size() - 1) / 2 + 1;
  return reduce2_channels * reduced * reduced;
}

nlohmann::json RsNetConfig::to_json() const {
  return {{"input_size", input_size},
          {"stem_channels", stem_channels},
          {"stem_stride", stem_stride},
          {"growth_rate", growth_rate},
          {"block1_layers", block1_layers},
          {"block2_layers", block2_layers},
          {"transition_channels", transition_channels},
          {"reduce1_channels", reduce1_channels},
          {"reduce2_channels", reduce2_channels},
          {"spectral_bands", spectral_bands},
          {"head_dims", head_dims},
          {"head_dropout", head_dropout},
          {"alpha", alpha}};
}

RsNetConfig RsNetConfig::from_json(const nlohmann::json& j) {
  RsNetConfig c;
  if (!j.is_object()) throw std::invalid_argument("rsnet config: expected an object");
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("input_size", c.input_size);
  get("stem_channels", c.stem_channels);
  get("stem_stride", c.stem_stride);
  get("growth_rate", c.growth_rate);
  get("block1_layers", c.block1_layers);
  get("block2_layers", c.block2_layers);
  get("transition_channels", c.transition_channels);
  get("reduce1_channels", c.reduce1_channels);
  get("reduce2_channels", c.reduce2_channels);
  get("spectral_bands", c.spectral_bands);
  get("head_dims", c.head_dims);
  get("head_dropout", c.head_dropout);
  get("alpha", c.alpha);
  c.validate();
  return c;
}

std::size_t RsNet::add_param(const std::string& name, Tensor value) {
  params_.emplace_back(name, std::move(value));
  return params_.size() - 1;
}

RsNet::RsNet(RsNetConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  const auto& c = config_;
  std::uint64_t k = 0;
  auto conv = [&](const std::string& name, int cout, int cin, int ks) {
    add_param(name + ".w", nn::kaiming_normal({cout, cin, ks, ks}, cin * ks * ks, mix_seed(seed, ++k)));
    add_param(name + ".b", Tensor({cout}));
  };
  auto fc = [&](const std::string& name, int out, int in) {
    add_param(name + ".w", nn::kaiming_normal({out, in}, in, mix_seed(seed, ++k)));
    add_param(name + ".b", Tensor({out}));
  };
  conv("stem", c.stem_channels, 3, 3);
  for (int l = 0; l < c.block1_layers; ++l) {
    conv("block1." + std::to_string(l), c.growth_rate, c.stem_channels + l * c.growth_rate, 3);
  }
  conv("transition", c.transition_channels, c.block1_out_channels(), 1);
  for (int l = 0; l < c.block2_layers; ++l) {
    conv("block2." + std::to_string(l), c.growth_rate, c.transition_channels + l * c.growth_rate, 3);
  }
  conv("reduce1", c.reduce1_channels, c.fused_channels(), 3);
  conv("reduce2", c.reduce2_channels, c.reduce1_channels, 3);
  fc("fc1", c.spectral_bands, c.flat_features());
  fc("fc2", c.spectral_bands, c.spectral_bands);
}

std::vector<Parameter*> RsNet::parameter_ptrs() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::size_t RsNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

ForwardTrace RsNet::build(Tape& tape, const Tensor& patch, const ParamBinder& bind) const {
  const auto& c = config_;
  const nn::Shape expect{3, c.input_size, c.input_size};
  if (patch.shape() != expect) {
    throw nn::ShapeError("rsnet: patch must be " + nn::shape_str(expect) + ", got " + nn::shape_str(patch.shape()));
  }
  std::size_t p = 0;
  auto next = [&]() { return bind(p++); };

  ForwardTrace t;
  Var x = tape.constant(patch);
  {
    Var w = next(), b = next();
    x = nn::maxpool2d(nn::relu(nn::conv2d(x, w, b, c.stem_stride, 1)), 2, 2);
  }
  std::vector<Var> feats{x};
  for (int l = 0; l < c.block1_layers; ++l) {
    Var w = next(), b = next();
    feats.push_back(nn::dense_layer(feats, w, b));
  }
  t.x7 = nn::concat_channels(feats);
  {
    Var w = next(), b = next();
    t.x8 = nn::maxpool2d(nn::relu(nn::conv2d(t.x7, w, b, 1, 0)), 2, 2);
  }
  feats = {t.x8};
  for (int l = 0; l < c.block2_layers; ++l) {
    Var w = next(), b = next();
    feats.push_back(nn::dense_layer(feats, w, b));
  }
  t.x21 = nn::concat_channels(feats);
  Var skip = t.x8;
  if (skip.dim(1) != t.x21.dim(1)) {
    const int ratio = skip.dim(1) / t.x21.dim(1);
    skip = nn::maxpool2d(skip, ratio, ratio);
  }
  t.fused = nn::concat_channels(skip, t.x21);
  {
    Var w = next(), b = next();
    x = nn::relu(nn::conv2d(t.fused, w, b, 2, 1));
  }
  {
    Var w = next(), b = next();
    x = nn::relu(nn::conv2d(x, w, b, 1, 1));
  }
  x = nn::flatten(x);
  {
    Var w = next(), b = next();
    x = nn::gelu(nn::linear(x, w, b));
  }
  {
    Var w = next(), b = next();
    t.spectrum = nn::softplus(nn::linear(x, w, b));
  }
  return t;
}

ForwardTrace RsNet::forward(Tape& tape, const Tensor& patch) {
  return build(tape, patch, [&](std::size_t i) { return tape.parameter(params_.at(i)); });
}

ForwardTrace RsNet::forward_const(Tape& tape, const Tensor& patch) const {
  return build(tape, patch, [&](std::size_t i) { return tape.constant(params_.at(i).value); });
}

SpectralSignature RsNet::predict_spectrum(const Tensor& patch) const {
  Tape tape;
  const auto t = forward_const(tape, patch);
  const auto d = t.spectrum.value().data();
  return SpectralSignature(d.begin(), d.end());
}

SpectralSignature forward_spectral(const RsNet& model, const Tensor& patch) { return model.predict_spectrum(patch); }

HeadConfig HeadConfig::classifier(const RsNetConfig& net, int classes) {
  if (classes < 2) throw std::invalid_argument("classifier head needs at least 2 classes");
  return HeadConfig{HeadKind::classification, classes, net.head_dims, net.head_dropout};
}

HeadConfig HeadConfig::friction(const RsNetConfig& net) {
  return HeadConfig{HeadKind::regression, 1, net.head_dims, net.head_dropout};
}

nlohmann::json HeadConfig::to_json() const {
  return {{"kind", kind == HeadKind::classification ? "classification" : "regression"},
          {"outputs", outputs},
          {"hidden", hidden},
          {"dropout", dropout}};
}

HeadConfig HeadConfig::from_json(const nlohmann::json& j) {
  HeadConfig h;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "classification") {
    h.kind = HeadKind::classification;
  } else if (kind == "regression") {
    h.kind = HeadKind::regression;
  } else {
    throw std::invalid_argument("head config: unknown kind '" + kind + "'");
  }
  j.at("outputs").get_to(h.outputs);
  j.at("hidden").get_to(h.hidden);
  j.at("dropout").get_to(h.dropout);
  return h;
}

int TaskOutput::argmax() const {
  if (probabilities.empty()) throw std::logic_error("argmax on a regression output");
  return static_cast<int>(std::max_element(probabilities.begin(), probabilities.end()) - probabilities.begin());
}

TaskHead::TaskHead(HeadConfig config, int spectral_bands, std::uint64_t seed)
    : config_(std::move(config)), bands_(spectral_bands) {
  if (config_.kind == HeadKind::regression && config_.outputs != 1) {
    throw std::invalid_argument("regression head must have exactly one output");
  }
  if (config_.kind == HeadKind::classification && config_.outputs < 2) {
    throw std::invalid_argument("classification head needs at least 2 outputs");
  }
  if (!(config_.dropout >= 0.0 && config_.dropout < 1.0)) throw std::invalid_argument("head dropout must be in [0, 1)");
  std::vector<int> dims{bands_};
  dims.insert(dims.end(), config_.hidden.begin(), config_.hidden.end());
  dims.push_back(config_.outputs);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] < 1 || dims[l + 1] < 1) throw std::invalid_argument("head layer widths must be positive");
    const std::string name = "head." + std::to_string(l);
    params_.emplace_back(name + ".w", nn::kaiming_normal({dims[l + 1], dims[l]}, dims[l], mix_seed(seed, 1000 + l)));
    params_.emplace_back(name + ".b", Tensor({dims[l + 1]}));
  }
}

std::vector<Parameter*> TaskHead::parameter_ptrs() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

Var TaskHead::build(Tape&, Var spectrum, const ForwardMode& mode, const ParamBinder& bind) const {
  if (spectrum.value().rank() != 1 || static_cast<int>(spectrum.size()) != bands_) {
    throw nn::ShapeError("task head: expected a spectrum of " + std::to_string(bands_) + " bands, got " +
                         nn::shape_str(spectrum.shape()));
  }
  const std::size_t layers = params_.size() / 2;
  Var x = spectrum;
  for (std::size_t l = 0; l < layers; ++l) {
    x = nn::linear(x, bind(2 * l), bind(2 * l + 1));
    if (l + 1 < layers) {
      x = nn::dropout(nn::gelu(x), config_.dropout, mode.training, mix_seed(mode.dropout_seed, l));
    }
  }
  if (config_.kind == HeadKind::classification) return nn::softmax(x);
  return nn::affine(nn::sigmoid(x), synth::kMaxFriction - synth::kMinFriction, synth::kMinFriction);
}

Var TaskHead::forward(Tape& tape, Var spectrum, const ForwardMode& mode) {
  return build(tape, spectrum, mode, [&](std::size_t i) { return tape.parameter(params_.at(i)); });
}

Var TaskHead::forward_const(Tape& tape, Var spectrum) const {
  return build(tape, spectrum, ForwardMode{}, [&](std::size_t i) { return tape.constant(params_.at(i).value); });
}

namespace {

TaskOutput to_output(const HeadConfig& cfg, const Tensor& v) {
  TaskOutput out;
  if (cfg.kind == HeadKind::classification) {
    out.probabilities.assign(v.data().begin(), v.data().end());
  } else {
    out.friction = v[0];
  }
  return out;
}

}  // namespace

TaskOutput TaskHead::predict(const SpectralSignature& spectrum) const {
  if (static_cast<int>(spectrum.size()) != bands_) {
    throw nn::ShapeError("task head: expected " + std::to_string(bands_) + " bands, got " +
                         std::to_string(spectrum.size()));
  }
  Tape tape;
  Var s = tape.constant(Tensor({bands_}, spectrum));
  return to_output(config_, forward_const(tape, s).value());
}

TaskOutput forward_task(const TaskHead& head, const SpectralSignature& spectrum) { return head.predict(spectrum); }

TaskOutput RsNetModel::predict(const Tensor& patch) const {
  if (!head) throw std::logic_error("model has no task head");
  Tape tape;
  const auto t = backbone.forward_const(tape, patch);
  return to_output(head->config(), head->forward_const(tape, t.spectrum).value());
}

}  // namespace rsnet::model
