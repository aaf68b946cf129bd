#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "earthvox/voxel_grid.hpp"

namespace earthvox {

// SVOX container, little-endian:
//   "SVX1" | u32 version=1 | u32 L | f32 voxel_size | u32 N | u16 C | u16 0
//   | N x (i32 x, i32 y, i32 z) in canonical order | N x C f32, row-major
// L = 0 stores an unbounded grid.
inline constexpr std::uint32_t kSvoxVersion = 1;
inline constexpr std::size_t kSvoxHeaderSize = 24;

std::vector<std::uint8_t> encode_svox(const SparseVoxelGrid& g);
SparseVoxelGrid decode_svox(const std::vector<std::uint8_t>& bytes);

void write_svox(const SparseVoxelGrid& g, const std::filesystem::path& path);
SparseVoxelGrid read_svox(const std::filesystem::path& path);

}  // namespace earthvox
