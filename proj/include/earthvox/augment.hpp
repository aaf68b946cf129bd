#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "earthvox/geo.hpp"
#include "earthvox/rng.hpp"
#include "earthvox/voxel_grid.hpp"

namespace earthvox {

/// Offset set for jagged perturbation: {-1, 0, 1} or the half-open {-1, 0}.
enum class JaggedMode { Symmetric, HalfOpen };

/// Offsets every coordinate per axis by a random draw, then de-duplicates
/// keeping the first voxel's features. On bounded grids coordinates pushed
/// outside [0, L) are discarded.
SparseVoxelGrid jagged_perturb(const SparseVoxelGrid& g, Rng& rng,
                               JaggedMode mode = JaggedMode::Symmetric);

/// Dilation by the full kernel^3 cube followed by block simplification.
/// Voxels already present keep their feature rows; new voxels get zeros.
SparseVoxelGrid roughen(const SparseVoxelGrid& latents, int dilation_kernel,
                        int simplify_factor);

/// The two principal XY directions of the voxel normals (3 feature channels),
/// from the eigenvectors of the 2x2 second-moment matrix of the XY
/// components, largest eigenvalue first. Each axis is signed so that the
/// summed projection of the normals onto it is non-negative.
std::array<Eigen::Vector2d, 2> principal_normal_axes(const SparseVoxelGrid& cond);

/// Removes voxels whose normal has cosine similarity > threshold with the
/// horizontal direction, after closing the marked set with the kernel cube.
/// Closing only fills in voxels that face the direction (cosine > 0).
SparseVoxelGrid normal_drop_along(const SparseVoxelGrid& cond, const Eigen::Vector2d& direction,
                                  double threshold, int closing_kernel = 3);

struct NormalDropConfig {
  double threshold = 0.8;
  int closing_kernel = 3;
  double noise_deg = 5.0;
};

/// Picks one principal axis uniformly, rotates it by uniform noise in
/// [-noise_deg, noise_deg] and applies normal_drop_along.
SparseVoxelGrid normal_drop(const SparseVoxelGrid& cond, Rng& rng,
                            const NormalDropConfig& cfg = {});

struct AugmentedScene {
  SparseVoxelGrid grid;
  std::vector<CameraPose> poses;
};

/// World reflection matching the voxel flip c -> L-1-c along axis. The camera
/// x axis is negated as well, so the pose stays right-handed and image
/// columns mirror about cx.
CameraPose mirror_pose(const CameraPose& pose, int axis, double extent);

/// Flips a bounded grid along axis (0, 1 or 2) together with its poses.
AugmentedScene flip_with_pose(const SparseVoxelGrid& g, int axis,
                              std::span<const CameraPose> poses);

/// Half-open voxel box [min, max).
struct VoxelBox {
  Coord3 min;
  Coord3 max;
};

/// Keeps voxels inside box, shifted so box.min becomes the origin; pose
/// positions shift by -box.min * voxel_size.
AugmentedScene crop_with_pose(const SparseVoxelGrid& g, const VoxelBox& box,
                              std::span<const CameraPose> poses);

/// min(n, |g|) voxels drawn without replacement, returned with zero features.
SparseVoxelGrid random_zero_condition(const SparseVoxelGrid& g, std::size_t n, Rng& rng);

}  // namespace earthvox
