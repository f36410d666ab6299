#pragma once

// MVPW weight checkpoints. Layout, all integers and floats little-endian:
//
//   "MVPW"  u32 version (= 1)
//   config block:
//     u8 arch, u32 d_in_v, u32 d_in_m, u32 d_h, u32 layers, u32 heads,
//     u32 max_len, u32 ffn_mult, u8 temporal_v, u8 temporal_m,
//     f32 temperature, u32 mlp_hidden
//   u32 parameter count, then per parameter:
//     u32 name length, UTF-8 name, u32 rank, u32 dims[rank], f32 values[]
//
// Parameters appear in Model::parameters() order.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mvpt/model/encoder.hpp"

namespace mvpt::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const Model<float>& model);
Model<float> deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model);
Model<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace mvpt::model
