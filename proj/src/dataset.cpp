#include "earthvox/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "earthvox/error.hpp"

namespace earthvox {

namespace {

constexpr std::array<SemanticClass, 25> kClasses{{
    {1, "Agriculture Field", 1.5903, {60, 76, 231}},
    {2, "Woodland", 28.8137, {219, 152, 52}},
    {3, "Grassland", 27.8886, {113, 204, 46}},
    {4, "Building", 13.9675, {182, 89, 155}},
    {5, "Road", 8.4591, {15, 196, 241}},
    {6, "Excavated Land", 2.3485, {34, 126, 230}},
    {7, "Bare Land", 0.1045, {156, 188, 26}},
    {8, "Water", 1.6379, {160, 76, 231}},
    {9, "Pavement", 13.5912, {94, 73, 52}},
    {10, "Ship", 0.0470, {133, 160, 22}},
    {11, "Storage Tank", 0.0385, {43, 57, 192}},
    {12, "Baseball Diamond", 0.0610, {185, 128, 41}},
    {13, "Tennis Court", 0.0463, {96, 174, 39}},
    {14, "Basketball Court", 0.0290, {173, 68, 142}},
    {15, "Ground Track Field", 0.0375, {18, 156, 243}},
    {16, "Bridge", 0.0243, {0, 84, 211}},
    {17, "Vehicle", 0.9404, {141, 140, 127}},
    {18, "Helicopter", 0.0001, {137, 122, 108}},
    {19, "Swimming Pool", 0.1175, {89, 140, 163}},
    {20, "Roundabout", 0.0080, {182, 159, 97}},
    {21, "Soccer Ball Field", 0.2278, {206, 143, 187}},
    {22, "Plane", 0.0013, {43, 147, 240}},
    {23, "Harbor", 0.0141, {124, 175, 77}},
    {24, "Greenhouse", 0.0047, {46, 58, 176}},
    {25, "Solar Panel", 0.0012, {226, 173, 93}},
}};

void check_map(const HeightMap& map) {
  if (map.values.size() != map.rows * map.cols) throw Error("height map size mismatch");
}

}  // namespace

SplitResult height_split(std::span<const SceneRecord> records, const SplitConfig& cfg, Rng& rng) {
  if (records.empty()) throw Error("cannot split an empty manifest");
  if (cfg.groups < 1) throw Error("split needs at least one group");
  if (!(cfg.ratio >= 0.0 && cfg.ratio <= 1.0)) throw Error("split ratio must lie in [0, 1]");

  const auto [lo_it, hi_it] = std::minmax_element(
      records.begin(), records.end(),
      [](const SceneRecord& a, const SceneRecord& b) { return a.max_height < b.max_height; });
  const double lo = lo_it->max_height;
  const double width = hi_it->max_height - lo;
  const auto groups = static_cast<std::size_t>(cfg.groups);

  std::vector<std::vector<std::size_t>> bins(groups);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!(records[i].max_height >= 0.0)) {
      throw Error("scene '" + records[i].id + "' has a negative or invalid max height");
    }
    std::size_t b = 0;
    if (width > 0.0) {
      b = static_cast<std::size_t>(std::floor((records[i].max_height - lo) / width *
                                              static_cast<double>(groups)));
      b = std::min(b, groups - 1);
    }
    bins[b].push_back(i);
  }

  SplitResult out;
  std::vector<bool> is_val(records.size(), false);
  for (auto& bin : bins) {
    const std::size_t n = bin.size();
    out.bin_sizes.push_back(n);
    if (n == 0) {
      out.bin_val_counts.push_back(0);
      continue;
    }
    const auto rounded = static_cast<std::size_t>(std::llround(cfg.ratio * static_cast<double>(n)));
    const std::size_t k = std::min(n, std::max(rounded, std::min(cfg.min_val, n)));
    // Partial Fisher-Yates over the bin.
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n) - 1));
      std::swap(bin[i], bin[j]);
      is_val[bin[i]] = true;
    }
    out.bin_val_counts.push_back(k);
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    (is_val[i] ? out.val : out.train).push_back(records[i].id);
  }
  return out;
}

std::vector<double> sample_weights(std::span<const SceneRecord> records, const WeightConfig& cfg) {
  if (cfg.alpha < 0.0) throw Error("weight exponent must be non-negative");
  if (!(cfg.divisor > 0.0)) throw Error("weight divisor must be positive");
  std::vector<double> z;
  z.reserve(records.size());
  for (const auto& r : records) {
    if (!(r.max_height >= 0.0)) throw Error("scene '" + r.id + "' has an invalid max height");
    z.push_back(std::pow(std::min(r.max_height, cfg.clamp) / cfg.divisor, cfg.alpha));
  }
  const double total = std::accumulate(z.begin(), z.end(), 0.0);
  if (!(total > 0.0)) throw Error("all sampling weights are zero");
  for (auto& v : z) v /= total;
  return z;
}

bool filter_by_height(const HeightMap& map, double max_height) {
  check_map(map);
  if (map.values.empty()) throw Error("height map is empty");
  return static_cast<double>(*std::max_element(map.values.begin(), map.values.end())) <= max_height;
}

double mean_gradient(const HeightMap& map, double cell_size) {
  check_map(map);
  if (map.rows < 2 || map.cols < 2) throw Error("gradient filter needs at least a 2x2 map");
  if (!(cell_size > 0.0)) throw Error("cell size must be positive");
  auto h = [&](std::size_t r, std::size_t c) {
    return static_cast<double>(map.values[r * map.cols + c]);
  };
  auto diff = [](auto&& f, std::size_t i, std::size_t n) {
    if (i == 0) return f(1) - f(0);
    if (i == n - 1) return f(n - 1) - f(n - 2);
    return (f(i + 1) - f(i - 1)) / 2.0;
  };
  double sum = 0.0;
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      const double gx = diff([&](std::size_t k) { return h(r, k); }, c, map.cols) / cell_size;
      const double gy = diff([&](std::size_t k) { return h(k, c); }, r, map.rows) / cell_size;
      sum += std::sqrt(gx * gx + gy * gy);
    }
  }
  return sum / static_cast<double>(map.values.size());
}

bool filter_by_gradient(const HeightMap& map, double min_gradient, double cell_size) {
  return mean_gradient(map, cell_size) >= min_gradient;
}

std::span<const SemanticClass> semantic_classes() { return kClasses; }

const SemanticClass& semantic_class(int id) {
  if (id < 1 || id > static_cast<int>(kClasses.size())) {
    throw Error("unknown semantic class id " + std::to_string(id));
  }
  return kClasses[static_cast<std::size_t>(id - 1)];
}

std::array<std::uint8_t, 3> semantic_color(int id) { return semantic_class(id).color; }

std::string_view semantic_name(int id) { return semantic_class(id).name; }

int semantic_id_from_color(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (r == 0 && g == 0 && b == 0) return 0;
  for (const auto& c : kClasses) {
    if (c.color[0] == r && c.color[1] == g && c.color[2] == b) return c.id;
  }
  return -1;
}

}  // namespace earthvox
