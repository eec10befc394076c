#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "msurr/surrogate/model.hpp"

namespace msurr::surrogate {

inline constexpr std::string_view kCheckpointMagic = "MSURRCKP";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint bytes (little-endian; layout in docs/formats.md).
/// Wall-clock times are not stored, so identical training runs produce
/// identical files.
std::string serialize_checkpoint(const SurrogateModel& model);
/// Throws FormatError on bad magic, unknown version, truncation, trailing
/// bytes or checksum mismatch, and ConfigError when the content is invalid.
SurrogateModel deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const SurrogateModel& model);
SurrogateModel load_checkpoint(const std::filesystem::path& path);

/// Digest of everything that affects predictions (features, standardizer,
/// shape, weights) but not the training history; 16 hex digits.
std::string model_checksum(const SurrogateModel& model);

}  // namespace msurr::surrogate
