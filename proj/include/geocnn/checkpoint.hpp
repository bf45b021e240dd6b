#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "geocnn/network.hpp"

namespace geocnn {

// Binary checkpoint layout, all integers little-endian:
//   "LNCK"  u16 version
//   u32 length, JSON descriptor (Network::describe())
//   u32 tensor count, then per tensor:
//     u32 name length, name, u8 rank, u32 dims[rank], u8 precision (1=f32, 2=f64),
//     raw values
// Every parameter is stored, trainable or not. Loading into a network of the
// other precision converts the values.
inline constexpr std::uint16_t kCheckpointVersion = 1;

template <typename T>
std::vector<std::uint8_t> serialize_checkpoint(const Network<T>& net);

// Throws CheckpointError with the byte offset of the first problem.
template <typename T>
Network<T> parse_checkpoint(const std::vector<std::uint8_t>& bytes);

template <typename T>
void save_checkpoint(const Network<T>& net, const std::filesystem::path& path);

template <typename T>
Network<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace geocnn
