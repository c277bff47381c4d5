#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "lld/training.hpp"

namespace lld {

inline constexpr uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'L', 'L', 'D', 'C', 'K', 'P', 'T', '\0'};

/// On-disk layout:
///   8 bytes   magic "LLDCKPT\0"
///   u64 LE    length of the JSON header
///   header    UTF-8 JSON: format, version, stage, counters, schedule, model,
///             tensor table (name, dtype, shape, offset, nbytes)
///   payload   raw little-endian tensor bytes at the listed offsets
///
/// Tensor names: encoder.*, dgnet.*, denoiser.*, ema.denoiser.*, adam.m.*, adam.v.*
void save_checkpoint(const std::filesystem::path& path, const TrainState& state,
                     const nlohmann::json& extra = nlohmann::json::object());

TrainState load_checkpoint(const std::filesystem::path& path);

/// Header of a checkpoint without reading tensor payloads.
nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

/// FNV-1a of the whole file, as 16 hex digits.
std::string checkpoint_hash(const std::filesystem::path& path);

}  // namespace lld
