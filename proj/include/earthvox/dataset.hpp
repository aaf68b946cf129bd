#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "earthvox/rng.hpp"

namespace earthvox {

struct SceneRecord {
  std::string id;
  double max_height = 0.0;  // maximum voxel height Z, meters
  std::string source;
};

struct SplitConfig {
  int groups = 20;
  double ratio = 1.0 / 120.0;
  std::size_t min_val = 8;
};

struct SplitResult {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::size_t> bin_sizes;
  std::vector<std::size_t> bin_val_counts;
};

/// Height-stratified split. Records fall into `groups` equal-width bins over
/// [min Z, max Z]; each non-empty bin sends max(round(ratio * n), min(min_val, n))
/// of its records to validation. Both lists keep manifest order.
SplitResult height_split(std::span<const SceneRecord> records, const SplitConfig& cfg, Rng& rng);

struct WeightConfig {
  double alpha = 1.0;
  double clamp = 200.0;
  double divisor = 10.0;
};

/// z_i = (min(Z_i, clamp) / divisor)^alpha, normalized to sum to one.
std::vector<double> sample_weights(std::span<const SceneRecord> records, const WeightConfig& cfg = {});

/// Row-major height raster.
struct HeightMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;
};

/// Keep iff max(height) <= max_height.
bool filter_by_height(const HeightMap& map, double max_height);

/// Mean magnitude of the height gradient: central differences inside,
/// one-sided differences on the border, divided by cell_size.
double mean_gradient(const HeightMap& map, double cell_size = 1.0);

/// Keep iff mean_gradient >= min_gradient.
bool filter_by_gradient(const HeightMap& map, double min_gradient, double cell_size = 1.0);

struct SemanticClass {
  int id;
  std::string_view name;
  double percentage;
  std::array<std::uint8_t, 3> color;
};

/// The 25 land-cover classes, ordered by id.
std::span<const SemanticClass> semantic_classes();
const SemanticClass& semantic_class(int id);
std::array<std::uint8_t, 3> semantic_color(int id);
std::string_view semantic_name(int id);
/// Class id for an exact palette color, 0 for black (unlabeled), -1 otherwise.
int semantic_id_from_color(std::uint8_t r, std::uint8_t g, std::uint8_t b);

}  // namespace earthvox
