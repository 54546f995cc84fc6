#include "rsnet/model/weights.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace rsnet::model {

namespace {

nlohmann::json descriptor(const RsNetModel& model) {
  nlohmann::json j{{"backbone", model.backbone.config().to_json()}};
  j["head"] = model.head ? model.head->config().to_json() : nlohmann::json(nullptr);
  return j;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void write_param(std::ostream& os, const nn::Parameter& p) {
  io::write_string(os, p.name);
  io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(p.value.rank()));
  for (int d : p.value.shape()) io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  os.write(reinterpret_cast<const char*>(p.value.data().data()), static_cast<std::streamsize>(p.value.size() * 8));
}

void read_param(std::istream& is, nn::Parameter& p) {
  const std::string name = io::read_string(is, "parameter name", 1024);
  if (name != p.name) throw io::FormatError("weights: expected parameter '" + p.name + "', found '" + name + "'");
  const auto rank = io::read_pod<std::uint32_t>(is, "parameter rank");
  if (rank != p.value.rank()) throw io::FormatError("weights: rank mismatch for " + name);
  for (std::uint32_t i = 0; i < rank; ++i) {
    const auto d = io::read_pod<std::uint32_t>(is, "parameter dim");
    if (static_cast<int>(d) != p.value.dim(i)) throw io::FormatError("weights: shape mismatch for " + name);
  }
  if (!is.read(reinterpret_cast<char*>(p.value.data().data()), static_cast<std::streamsize>(p.value.size() * 8))) {
    throw io::FormatError("weights: truncated data for " + name);
  }
}

}  // namespace

std::uint64_t config_fingerprint(const RsNetModel& model) { return fnv1a(descriptor(model).dump()); }

void save_weights(const RsNetModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  const std::string desc = descriptor(model).dump();
  io::write_magic(os, "RSNW");
  io::write_pod<std::uint32_t>(os, kWeightFormatVersion);
  io::write_pod<std::uint64_t>(os, fnv1a(desc));
  io::write_string(os, desc);
  const std::size_t n = model.backbone.parameters().size() + (model.head ? model.head->parameters().size() : 0);
  io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(n));
  for (const auto& p : model.backbone.parameters()) write_param(os, p);
  if (model.head) {
    for (const auto& p : model.head->parameters()) write_param(os, p);
  }
  if (!os) throw std::runtime_error("error while writing " + path.string());
}

RsNetModel load_weights(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  io::expect_magic(is, "RSNW");
  const auto version = io::read_pod<std::uint32_t>(is, "format version");
  if (version != kWeightFormatVersion) {
    throw VersionError("weights: format version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kWeightFormatVersion) + ")");
  }
  const auto fingerprint = io::read_pod<std::uint64_t>(is, "config fingerprint");
  const std::string desc = io::read_string(is, "descriptor");
  if (fnv1a(desc) != fingerprint) throw io::FormatError("weights: config fingerprint does not match descriptor");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(desc);
  } catch (const nlohmann::json::exception& e) {
    throw io::FormatError(std::string("weights: bad descriptor: ") + e.what());
  }
  RsNetModel model{RsNet(RsNetConfig::from_json(j.at("backbone"))), std::nullopt};
  if (!j.at("head").is_null()) {
    model.head.emplace(HeadConfig::from_json(j.at("head")), model.backbone.config().spectral_bands);
  }
  const auto n = io::read_pod<std::uint32_t>(is, "parameter count");
  const std::size_t expect = model.backbone.parameters().size() + (model.head ? model.head->parameters().size() : 0);
  if (n != expect) throw io::FormatError("weights: parameter count mismatch");
  for (auto& p : model.backbone.parameters()) read_param(is, p);
  if (model.head) {
    for (auto& p : model.head->parameters()) read_param(is, p);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw io::FormatError("weights: trailing bytes after parameters");
  return model;
}

}  // namespace rsnet::model
