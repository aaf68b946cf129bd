#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace earthvox {

struct Coord3 {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  friend auto operator<=>(const Coord3&, const Coord3&) = default;
};

/// Floor division (rounds toward negative infinity); divisor must be positive.
constexpr std::int32_t floor_div(std::int32_t value, std::int32_t divisor) {
  std::int32_t q = value / divisor;
  if ((value % divisor != 0) && (value < 0)) --q;
  return q;
}

/// Spatial metadata shared by every grid.
///
/// A resolution of 0 marks an unbounded grid (condition point clouds); any
/// other value L constrains all coordinates to [0, L) per axis.
struct GridSpec {
  std::uint32_t resolution = 0;
  float voxel_size = 1.0f;

  bool bounded() const { return resolution != 0; }
  bool contains(const Coord3& c) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Immutable sparse set of integer voxels with optional per-voxel feature rows.
///
/// Invariants, established by every constructor:
///   - coordinates are unique and sorted ascending lexicographically (x, y, z)
///   - features hold size() * channels() floats, row-major
///   - bounded grids only hold coordinates inside [0, L)^3
class SparseVoxelGrid {
 public:
  SparseVoxelGrid() = default;
  explicit SparseVoxelGrid(GridSpec spec) : spec_(spec) {}

  /// Sorts and de-duplicates; the first occurrence's feature row wins.
  /// Throws if features are not row-aligned or a coordinate is out of bounds.
  static SparseVoxelGrid canonicalize(std::vector<Coord3> coords,
                                      std::vector<float> features,
                                      std::size_t channels, GridSpec spec);
  static SparseVoxelGrid canonicalize(std::vector<Coord3> coords,
                                      GridSpec spec);

  /// Adopts data that is already canonical; validates instead of sorting.
  static SparseVoxelGrid from_canonical(std::vector<Coord3> coords,
                                        std::vector<float> features,
                                        std::size_t channels, GridSpec spec);

  const GridSpec& spec() const { return spec_; }
  std::uint32_t resolution() const { return spec_.resolution; }
  float voxel_size() const { return spec_.voxel_size; }
  bool bounded() const { return spec_.bounded(); }

  std::size_t size() const { return coords_.size(); }
  bool empty() const { return coords_.empty(); }
  std::size_t channels() const { return channels_; }
  bool has_features() const { return channels_ != 0; }

  std::span<const Coord3> coords() const { return coords_; }
  std::span<const float> features() const { return features_; }
  std::span<const float> row(std::size_t i) const {
    return {features_.data() + i * channels_, channels_};
  }

  /// Index of c in canonical order, or -1 when absent. O(log n).
  std::ptrdiff_t find(const Coord3& c) const;
  bool contains(const Coord3& c) const { return find(c) >= 0; }

  /// Same coordinates and spec, different feature matrix.
  SparseVoxelGrid with_features(std::vector<float> features,
                                std::size_t channels) const;
  SparseVoxelGrid without_features() const;
  SparseVoxelGrid with_spec(GridSpec spec) const;

  friend bool operator==(const SparseVoxelGrid&, const SparseVoxelGrid&) = default;

 private:
  GridSpec spec_{};
  std::vector<Coord3> coords_;
  std::vector<float> features_;
  std::size_t channels_ = 0;
};

enum class SetOp { Union, Intersection, Difference };
enum class MorphMode { Dilate, Erode };

/// Coordinate-set algebra; the result carries a's spec and no features.
SparseVoxelGrid set_op(const SparseVoxelGrid& a, const SparseVoxelGrid& b,
                       SetOp op);

/// Dilation or erosion with the full k^3 cube (k odd). Bounded grids are
/// clipped to [0, L); erosion ignores neighbors outside the grid.
SparseVoxelGrid morph(const SparseVoxelGrid& g, int kernel, MorphMode mode);

/// Floor-divides every coordinate by factor. Bounded resolution becomes
/// ceil(L / factor).
SparseVoxelGrid downsample_coords(const SparseVoxelGrid& g, int factor);

/// Replaces each voxel by its factor^3 children. Resolution becomes L * factor.
SparseVoxelGrid upsample_coords(const SparseVoxelGrid& g, int factor);

/// Block completion: upsample(downsample(g, s), s), kept at g's resolution.
SparseVoxelGrid simplify(const SparseVoxelGrid& g, int factor);

/// |A n B| / |A u B|, with two empty sets scoring 1.
double iou(const SparseVoxelGrid& a, const SparseVoxelGrid& b);

double occupancy_accuracy(std::span<const std::uint8_t> predicted,
                          std::span<const std::uint8_t> truth);

/// Every coordinate of the dense side^3 cube in canonical order.
std::vector<Coord3> dense_coords(std::uint32_t side);

}  // namespace earthvox
