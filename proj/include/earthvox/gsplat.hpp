#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "earthvox/voxel_grid.hpp"

namespace earthvox {

inline constexpr std::size_t kPrimitivesPerVoxel = 16;
inline constexpr std::size_t kRawPrimitiveWidth = 23;

/// Decoded surface splat.
///
/// rotation is (w, x, y, z). sh holds the four degree-1 coefficients for
/// R, G and B, coefficient-major: [c0.r c0.g c0.b c1.r ... c3.b].
struct GaussianPrimitive2D {
  std::array<float, 3> position{};
  std::array<float, 3> scale{};
  float opacity = 0.5f;
  std::array<float, 4> rotation{1.0f, 0.0f, 0.0f, 0.0f};
  std::array<float, 12> sh{};

  friend bool operator==(const GaussianPrimitive2D&, const GaussianPrimitive2D&) = default;
};

/// Decodes voxel-count x 16 x 23 raw parameters laid out as
/// offset(3) scale(3) opacity(1) quaternion(4) sh(12):
///   position = voxel center + tanh(offset) * voxel_size / 2
///   scale    = clamp(exp(raw), 1e-6, 4 * voxel_size)
///   opacity  = logistic(raw), kept strictly inside (0, 1)
///   rotation = normalized quaternion, identity when the norm is zero
std::vector<GaussianPrimitive2D> decode_primitives(std::span<const float> raw,
                                                   const SparseVoxelGrid& coords,
                                                   double voxel_size);

/// ASCII PLY, one vertex per primitive, properties in this order:
/// x y z scale_0..2 opacity rot_0..3 f_dc_0..2 f_rest_0..8 (all float).
/// f_dc holds the c0 coefficient per color; f_rest_{3*k + j} holds
/// coefficient j + 1 of color k. Values are written with round-trip precision.
std::string encode_ply(std::span<const GaussianPrimitive2D> primitives);
std::vector<GaussianPrimitive2D> decode_ply(const std::string& text);

void export_ply(std::span<const GaussianPrimitive2D> primitives, const std::filesystem::path& path);
std::vector<GaussianPrimitive2D> import_ply(const std::filesystem::path& path);

}  // namespace earthvox
