#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "earthvox/voxel_grid.hpp"

namespace earthvox {

/// Structural latent channel count.
inline constexpr std::size_t kLatentChannels = 32;

/// Candidate voxels produced by sparse upsampling, before classification.
/// parents[i] is the index, in the source grid, of the voxel that spawned
/// candidate i.
struct PseudoSparseGrid {
  SparseVoxelGrid candidates;
  std::vector<std::uint32_t> parents;
  int factor = 2;
};

/// Trades channels for resolution. A voxel at c spawns r^3 children at
/// r*c + (dx,dy,dz); the child with offset (dx,dy,dz) receives channel block
/// dx*r*r + dy*r + dz of width C / r^3.
PseudoSparseGrid sparse_pixel_shuffle(const SparseVoxelGrid& g, int factor = 2);

/// Inverse gather of sparse_pixel_shuffle. Requires every parent to have all
/// r^3 children present.
SparseVoxelGrid sparse_pixel_unshuffle(const PseudoSparseGrid& pseudo);

/// 1 where the candidate coordinate is in gt, else 0.
std::vector<std::uint8_t> pseudo_label_targets(const PseudoSparseGrid& pseudo,
                                               const SparseVoxelGrid& gt);

/// Keeps candidates whose logit is strictly greater than threshold.
SparseVoxelGrid prune_by_logits(const PseudoSparseGrid& pseudo,
                                std::span<const float> logits, double threshold);

/// Dense raster index with z varying fastest, then y, then x.
constexpr std::size_t raster_index(const Coord3& c, std::uint32_t side) {
  return (static_cast<std::size_t>(c.x) * side + static_cast<std::size_t>(c.y)) * side +
         static_cast<std::size_t>(c.z);
}

/// Voxels of the dense side^3 raster whose value is > 0.
SparseVoxelGrid coarse_threshold(std::span<const float> values, std::uint32_t side);
SparseVoxelGrid coarse_threshold(std::span<const double> values, std::uint32_t side);

/// Keeps voxels where strictly more than frac * C channels exceed tau.
SparseVoxelGrid latent_magnitude_filter(const SparseVoxelGrid& latents,
                                        double tau = 0.3, double frac = 0.5);

/// Zeroes the feature rows of voxels absent from valid.
SparseVoxelGrid zero_invalid_features(const SparseVoxelGrid& latents,
                                      const SparseVoxelGrid& valid);

}  // namespace earthvox
