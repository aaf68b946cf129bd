#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace earthvox {

/// Row-major H x W x C float image.
struct FeatureMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0f)
      : height(h), width(w), channels(c), data(h * w * c, fill) {}

  std::span<const float> at(std::size_t row, std::size_t col) const {
    return {data.data() + (row * width + col) * channels, channels};
  }
  std::span<float> at(std::size_t row, std::size_t col) {
    return {data.data() + (row * width + col) * channels, channels};
  }
};

/// One rendered view of the scene.
///
/// depth holds per-pixel distances in the normalized scene domain;
/// element_index holds the element hit by each pixel, -1 for background.
/// An empty mask means every pixel is eligible.
struct ViewSample {
  FeatureMap features;
  std::vector<float> depth;
  std::vector<std::int32_t> element_index;
  std::vector<std::uint8_t> mask;
  std::array<double, 3> origin{};
};

/// Positions and unit normals of the elements receiving features.
struct ElementGeometry {
  std::vector<std::array<double, 3>> positions;
  std::vector<std::array<double, 3>> normals;

  std::size_t size() const { return positions.size(); }
};

struct AggregationConfig {
  double z_far = 2.0;
  double tau_s = 3.0;
  double tau_d = 3.0;
  double eps = 1e-6;
};

/// |cos| between view direction and normal; both must be unit (1e-4).
double view_score(const std::array<double, 3>& view_dir,
                  const std::array<double, 3>& normal);

/// clamp(1 - d / z_far, 0, 1).
double distance_score(double depth, double z_far);

/// x^tau.
double score_power(double x, double tau);

/// Per-element accumulation counts and weights, reported alongside the
/// aggregated matrix.
struct AggregationStats {
  std::vector<std::size_t> contributions_per_view;
};

/// Weighted multi-view fusion of per-pixel features onto elements:
///   F_j = sum_c f_c * D_c^tau_d * S_c^tau_s / (sum_c D_c^tau_d * S_c^tau_s + eps)
/// Depth is clamped to [0, z_far] before scoring. The view direction of a
/// pixel is the unit vector from the hit element's position to the view
/// origin. Views are accumulated independently (optionally on `threads`
/// workers) and reduced in view order, so the result does not depend on the
/// thread count. Returns an element_count x F row-major matrix.
std::vector<float> scatter_aggregate(std::span<const ViewSample> views,
                                     const ElementGeometry& elements,
                                     const AggregationConfig& cfg = {},
                                     unsigned threads = 1,
                                     AggregationStats* stats = nullptr);

/// Nearest downscale to 1/1, 1/2 and 1/4 taking the top-left sample of each
/// block. H and W must be divisible by 4.
std::array<FeatureMap, 3> build_pyramid(const FeatureMap& map);

/// RGB at (u, v) followed by (u-1,v), (u+1,v), (u,v-1), (u,v+1), with u the
/// column and v the row. Neighbors past the border are clamped.
std::array<float, 15> cross_sample_rgb(const FeatureMap& image, std::size_t u,
                                       std::size_t v);

inline constexpr std::size_t kPyramidChannels = 16;
inline constexpr std::size_t kVoxelFeatureWidth = 66;

/// [f0 (16); f1 (16); f2 (16); cross RGB (15); normal (3)].
std::array<float, kVoxelFeatureWidth> assemble_voxel_feature(
    const std::array<FeatureMap, 3>& pyramid, const FeatureMap& rgb,
    const std::array<float, 3>& normal, std::size_t u, std::size_t v);

}  // namespace earthvox
