#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "s3d/network.hpp"

namespace s3d {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Checkpoint layout, all integers little-endian:
///
///   "S3DV"                         magic
///   u16                            format version
///   u32                            tensor count T
///   T x { u32 name_len, name bytes, u32 rank, rank x u64 extent }
///   T x raw f64 payloads, in table order
///
/// The first tensor, "config", holds the architecture as 8 doubles:
/// num_scales, features, num_classes, H, W, D, mode, zero_disparity_channel.
/// The remaining entries follow ResTdmModel::parameter_names().
std::vector<std::uint8_t> serialize_checkpoint(const ResTdmModel& model);
ResTdmModel deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const ResTdmModel& model,
                     const std::filesystem::path& path);
ResTdmModel load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

}  // namespace s3d
