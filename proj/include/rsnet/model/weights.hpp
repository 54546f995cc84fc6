#pragma once

#include <cstdint>
#include <filesystem>

#include "rsnet/model/rsnet.hpp"
#include "rsnet/util/binary_io.hpp"

namespace rsnet::model {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

/// The file was written by an incompatible format version.
class VersionError : public io::FormatError {
 public:
  using io::FormatError::FormatError;
};

/// FNV-1a over the canonical descriptor JSON (backbone config + head).
std::uint64_t config_fingerprint(const RsNetModel& model);

/// Layout: "RSNW", u32 version, u64 fingerprint, descriptor JSON string,
/// u32 parameter count, then per parameter {name, u32 rank, u32 dims...,
/// f64 data}. Little-endian.
void save_weights(const RsNetModel& model, const std::filesystem::path& path);

/// Builds a fresh model from the file; nothing is returned unless every
/// parameter was read and matched its expected shape.
RsNetModel load_weights(const std::filesystem::path& path);

}  // namespace rsnet::model
