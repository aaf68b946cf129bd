#include "earthvox/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "earthvox/error.hpp"

namespace earthvox {

namespace {

constexpr double kUnitTolerance = 1e-4;

double norm3(const std::array<double, 3>& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

void validate_view(const ViewSample& view, std::size_t index, std::size_t width_f,
                   std::size_t element_count) {
  const std::string tag = "view " + std::to_string(index) + ": ";
  const std::size_t pixels = view.features.height * view.features.width;
  if (view.features.channels != width_f) throw Error(tag + "feature width mismatch");
  if (view.features.data.size() != pixels * width_f) throw Error(tag + "feature map size mismatch");
  if (view.depth.size() != pixels) throw Error(tag + "depth map size mismatch");
  if (view.element_index.size() != pixels) throw Error(tag + "index map size mismatch");
  if (!view.mask.empty() && view.mask.size() != pixels) throw Error(tag + "mask size mismatch");
  for (std::int32_t idx : view.element_index) {
    if (idx < -1 || (idx >= 0 && static_cast<std::size_t>(idx) >= element_count)) {
      throw Error(tag + "element index " + std::to_string(idx) + " out of range");
    }
  }
}

// Accumulates one view into feature/weight buffers (element_count x F, element_count).
std::size_t accumulate_view(const ViewSample& view, const ElementGeometry& elements,
                            const AggregationConfig& cfg, std::vector<double>& feature,
                            std::vector<double>& weight) {
  const std::size_t f = view.features.channels;
  const std::size_t pixels = view.depth.size();
  std::size_t hits = 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    const std::int32_t idx = view.element_index[p];
    if (idx < 0) continue;
    if (!view.mask.empty() && view.mask[p] == 0) continue;
    const auto j = static_cast<std::size_t>(idx);
    const auto& pos = elements.positions[j];
    std::array<double, 3> dir{view.origin[0] - pos[0], view.origin[1] - pos[1],
                              view.origin[2] - pos[2]};
    const double len = norm3(dir);
    double s = 0.0;
    if (len > 0.0) {
      for (auto& d : dir) d /= len;
      s = view_score(dir, elements.normals[j]);
    }
    const double depth = std::clamp(static_cast<double>(view.depth[p]), 0.0, cfg.z_far);
    const double w = score_power(distance_score(depth, cfg.z_far), cfg.tau_d) *
                     score_power(s, cfg.tau_s);
    const float* src = view.features.data.data() + p * f;
    double* dst = feature.data() + j * f;
    for (std::size_t c = 0; c < f; ++c) dst[c] += static_cast<double>(src[c]) * w;
    weight[j] += w;
    ++hits;
  }
  return hits;
}

}  // namespace

double view_score(const std::array<double, 3>& view_dir,
                  const std::array<double, 3>& normal) {
  if (std::abs(norm3(view_dir) - 1.0) > kUnitTolerance ||
      std::abs(norm3(normal) - 1.0) > kUnitTolerance) {
    throw Error("view_score expects unit vectors");
  }
  const double dot = view_dir[0] * normal[0] + view_dir[1] * normal[1] + view_dir[2] * normal[2];
  return std::min(1.0, std::abs(dot));
}

double distance_score(double depth, double z_far) {
  if (!(z_far > 0.0)) throw Error("z_far must be positive");
  return std::clamp(1.0 - depth / z_far, 0.0, 1.0);
}

double score_power(double x, double tau) { return std::pow(x, tau); }

std::vector<float> scatter_aggregate(std::span<const ViewSample> views,
                                     const ElementGeometry& elements,
                                     const AggregationConfig& cfg, unsigned threads,
                                     AggregationStats* stats) {
  if (!(cfg.z_far > 0.0) || cfg.tau_s < 0.0 || cfg.tau_d < 0.0) {
    throw Error("invalid aggregation config");
  }
  const std::size_t n = elements.size();
  if (elements.normals.size() != n) throw Error("element positions and normals differ in count");
  for (const auto& nrm : elements.normals) {
    if (std::abs(norm3(nrm) - 1.0) > kUnitTolerance) throw Error("element normal is not unit length");
  }
  const std::size_t f = views.empty() ? 0 : views.front().features.channels;
  for (std::size_t v = 0; v < views.size(); ++v) validate_view(views[v], v, f, n);

  // Per-view partial sums, then a reduction in view order.
  std::vector<std::vector<double>> part_feat(views.size());
  std::vector<std::vector<double>> part_weight(views.size());
  std::vector<std::size_t> hits(views.size(), 0);
  auto work = [&](std::size_t v) {
    part_feat[v].assign(n * f, 0.0);
    part_weight[v].assign(n, 0.0);
    hits[v] = accumulate_view(views[v], elements, cfg, part_feat[v], part_weight[v]);
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(views.size())));
  if (workers <= 1) {
    for (std::size_t v = 0; v < views.size(); ++v) work(v);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t v = t; v < views.size(); v += workers) work(v);
      });
    }
  }

  std::vector<double> feature(n * f, 0.0);
  std::vector<double> weight(n, 0.0);
  for (std::size_t v = 0; v < views.size(); ++v) {
    for (std::size_t i = 0; i < feature.size(); ++i) feature[i] += part_feat[v][i];
    for (std::size_t j = 0; j < n; ++j) weight[j] += part_weight[v][j];
  }
  std::vector<float> out(n * f);
  for (std::size_t j = 0; j < n; ++j) {
    const double denom = weight[j] + cfg.eps;
    for (std::size_t c = 0; c < f; ++c) {
      out[j * f + c] = static_cast<float>(feature[j * f + c] / denom);
    }
  }
  if (stats != nullptr) stats->contributions_per_view = std::move(hits);
  return out;
}

std::array<FeatureMap, 3> build_pyramid(const FeatureMap& map) {
  if (map.height % 4 != 0 || map.width % 4 != 0) {
    throw Error("pyramid input dimensions must be divisible by 4");
  }
  std::array<FeatureMap, 3> out;
  for (std::size_t level = 0; level < 3; ++level) {
    const std::size_t step = std::size_t{1} << level;
    FeatureMap m(map.height / step, map.width / step, map.channels);
    for (std::size_t r = 0; r < m.height; ++r)
      for (std::size_t c = 0; c < m.width; ++c) {
        const auto src = map.at(r * step, c * step);
        std::copy(src.begin(), src.end(), m.at(r, c).begin());
      }
    out[level] = std::move(m);
  }
  return out;
}

std::array<float, 15> cross_sample_rgb(const FeatureMap& image, std::size_t u,
                                       std::size_t v) {
  if (image.channels != 3) throw Error("cross sampling expects a 3-channel image");
  if (u >= image.width || v >= image.height) throw Error("pixel outside image");
  const std::size_t last_col = image.width - 1;
  const std::size_t last_row = image.height - 1;
  const std::array<std::array<std::size_t, 2>, 5> taps{{
      {u, v},
      {u == 0 ? 0 : u - 1, v},
      {std::min(u + 1, last_col), v},
      {u, v == 0 ? 0 : v - 1},
      {u, std::min(v + 1, last_row)},
  }};
  std::array<float, 15> out{};
  for (std::size_t t = 0; t < taps.size(); ++t) {
    const auto px = image.at(taps[t][1], taps[t][0]);
    std::copy(px.begin(), px.end(), out.begin() + static_cast<std::ptrdiff_t>(t * 3));
  }
  return out;
}

std::array<float, kVoxelFeatureWidth> assemble_voxel_feature(
    const std::array<FeatureMap, 3>& pyramid, const FeatureMap& rgb,
    const std::array<float, 3>& normal, std::size_t u, std::size_t v) {
  std::array<float, kVoxelFeatureWidth> out{};
  auto dst = out.begin();
  for (std::size_t level = 0; level < 3; ++level) {
    const FeatureMap& m = pyramid[level];
    if (m.channels != kPyramidChannels) {
      throw Error("pyramid level " + std::to_string(level) + " has " +
                  std::to_string(m.channels) + " channels, expected 16");
    }
    const std::size_t col = u >> level;
    const std::size_t row = v >> level;
    if (col >= m.width || row >= m.height) throw Error("pixel outside pyramid level");
    const auto px = m.at(row, col);
    dst = std::copy(px.begin(), px.end(), dst);
  }
  const auto cross = cross_sample_rgb(rgb, u, v);
  dst = std::copy(cross.begin(), cross.end(), dst);
  std::copy(normal.begin(), normal.end(), dst);
  return out;
}

}  // namespace earthvox
