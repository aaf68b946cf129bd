#include "earthvox/pss.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "earthvox/error.hpp"

namespace earthvox {

namespace {

template <typename T>
SparseVoxelGrid threshold_dense(std::span<const T> values, std::uint32_t side) {
  const std::size_t cells = static_cast<std::size_t>(side) * side * side;
  if (values.size() != cells) {
    throw Error("dense field has " + std::to_string(values.size()) +
                " values, expected " + std::to_string(cells));
  }
  std::vector<Coord3> out;
  const auto s = static_cast<std::int32_t>(side);
  std::size_t i = 0;
  for (std::int32_t x = 0; x < s; ++x)
    for (std::int32_t y = 0; y < s; ++y)
      for (std::int32_t z = 0; z < s; ++z, ++i)
        if (values[i] > T{0}) out.push_back({x, y, z});
  return SparseVoxelGrid::from_canonical(std::move(out), {}, 0,
                                         GridSpec{side, 1.0f});
}

}  // namespace

PseudoSparseGrid sparse_pixel_shuffle(const SparseVoxelGrid& g, int factor) {
  if (factor < 2) throw Error("shuffle factor must be >= 2");
  const std::size_t r = static_cast<std::size_t>(factor);
  const std::size_t blocks = r * r * r;
  const std::size_t channels = g.channels();
  if (channels % blocks != 0) {
    throw Error("channel count " + std::to_string(channels) +
                " not divisible by factor^3 = " + std::to_string(blocks));
  }
  const std::size_t out_channels = channels / blocks;

  struct Child {
    Coord3 coord;
    std::uint32_t parent;
    std::uint32_t block;
  };
  std::vector<Child> children;
  children.reserve(g.size() * blocks);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const Coord3& c = g.coords()[p];
    for (int dx = 0; dx < factor; ++dx)
      for (int dy = 0; dy < factor; ++dy)
        for (int dz = 0; dz < factor; ++dz) {
          const auto block = static_cast<std::uint32_t>((dx * factor + dy) * factor + dz);
          children.push_back({{c.x * factor + dx, c.y * factor + dy, c.z * factor + dz},
                              static_cast<std::uint32_t>(p), block});
        }
  }
  std::sort(children.begin(), children.end(),
            [](const Child& a, const Child& b) { return a.coord < b.coord; });

  std::vector<Coord3> coords;
  std::vector<float> features;
  PseudoSparseGrid out;
  out.factor = factor;
  coords.reserve(children.size());
  features.reserve(children.size() * out_channels);
  out.parents.reserve(children.size());
  for (const auto& ch : children) {
    coords.push_back(ch.coord);
    out.parents.push_back(ch.parent);
    const auto src = g.row(ch.parent).subspan(ch.block * out_channels, out_channels);
    features.insert(features.end(), src.begin(), src.end());
  }
  GridSpec spec = g.spec();
  spec.resolution *= static_cast<std::uint32_t>(factor);
  spec.voxel_size /= static_cast<float>(factor);
  out.candidates = SparseVoxelGrid::from_canonical(std::move(coords), std::move(features),
                                                   out_channels, spec);
  return out;
}

SparseVoxelGrid sparse_pixel_unshuffle(const PseudoSparseGrid& pseudo) {
  const int factor = pseudo.factor;
  if (factor < 2) throw Error("shuffle factor must be >= 2");
  const std::size_t blocks = static_cast<std::size_t>(factor) * factor * factor;
  const SparseVoxelGrid& cand = pseudo.candidates;
  const std::size_t in_channels = cand.channels();
  const std::size_t out_channels = in_channels * blocks;

  std::vector<Coord3> parents;
  parents.reserve(cand.size() / blocks + 1);
  for (const auto& c : cand.coords()) {
    parents.push_back({floor_div(c.x, factor), floor_div(c.y, factor),
                       floor_div(c.z, factor)});
  }
  std::sort(parents.begin(), parents.end());
  parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
  if (parents.size() * blocks != cand.size()) {
    throw Error("unshuffle requires all factor^3 children of every parent");
  }

  std::vector<float> features(parents.size() * out_channels, 0.0f);
  for (std::size_t i = 0; i < cand.size(); ++i) {
    const Coord3& c = cand.coords()[i];
    const Coord3 p{floor_div(c.x, factor), floor_div(c.y, factor), floor_div(c.z, factor)};
    const auto pi = static_cast<std::size_t>(
        std::lower_bound(parents.begin(), parents.end(), p) - parents.begin());
    const std::size_t block = static_cast<std::size_t>(
        ((c.x - p.x * factor) * factor + (c.y - p.y * factor)) * factor + (c.z - p.z * factor));
    const auto src = cand.row(i);
    std::copy(src.begin(), src.end(),
              features.begin() + static_cast<std::ptrdiff_t>(pi * out_channels + block * in_channels));
  }
  GridSpec spec = cand.spec();
  if (spec.bounded()) {
    spec.resolution = (spec.resolution + factor - 1) / static_cast<std::uint32_t>(factor);
  }
  spec.voxel_size *= static_cast<float>(factor);
  return SparseVoxelGrid::from_canonical(std::move(parents), std::move(features),
                                         out_channels, spec);
}

std::vector<std::uint8_t> pseudo_label_targets(const PseudoSparseGrid& pseudo,
                                               const SparseVoxelGrid& gt) {
  std::vector<std::uint8_t> labels;
  labels.reserve(pseudo.candidates.size());
  for (const auto& c : pseudo.candidates.coords()) {
    labels.push_back(gt.contains(c) ? 1 : 0);
  }
  return labels;
}

SparseVoxelGrid prune_by_logits(const PseudoSparseGrid& pseudo,
                                std::span<const float> logits, double threshold) {
  const SparseVoxelGrid& cand = pseudo.candidates;
  if (logits.size() != cand.size()) {
    throw Error("logit count " + std::to_string(logits.size()) +
                " does not match candidate count " + std::to_string(cand.size()));
  }
  std::vector<Coord3> coords;
  std::vector<float> features;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (static_cast<double>(logits[i]) > threshold) {
      coords.push_back(cand.coords()[i]);
      const auto row = cand.row(i);
      features.insert(features.end(), row.begin(), row.end());
    }
  }
  return SparseVoxelGrid::from_canonical(std::move(coords), std::move(features),
                                         cand.channels(), cand.spec());
}

SparseVoxelGrid coarse_threshold(std::span<const float> values, std::uint32_t side) {
  return threshold_dense(values, side);
}

SparseVoxelGrid coarse_threshold(std::span<const double> values, std::uint32_t side) {
  return threshold_dense(values, side);
}

SparseVoxelGrid latent_magnitude_filter(const SparseVoxelGrid& latents, double tau,
                                        double frac) {
  const std::size_t channels = latents.channels();
  const double needed = frac * static_cast<double>(channels);
  const float tau_f = static_cast<float>(tau);  // latents are stored as f32
  std::vector<Coord3> coords;
  std::vector<float> features;
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const auto row = latents.row(i);
    const auto above = std::count_if(row.begin(), row.end(),
                                     [tau_f](float v) { return v > tau_f; });
    if (channels != 0 && static_cast<double>(above) > needed) {
      coords.push_back(latents.coords()[i]);
      features.insert(features.end(), row.begin(), row.end());
    }
  }
  return SparseVoxelGrid::from_canonical(std::move(coords), std::move(features),
                                         channels, latents.spec());
}

SparseVoxelGrid zero_invalid_features(const SparseVoxelGrid& latents,
                                      const SparseVoxelGrid& valid) {
  std::vector<float> features(latents.features().begin(), latents.features().end());
  const std::size_t channels = latents.channels();
  for (std::size_t i = 0; i < latents.size(); ++i) {
    if (!valid.contains(latents.coords()[i])) {
      std::fill_n(features.begin() + static_cast<std::ptrdiff_t>(i * channels), channels, 0.0f);
    }
  }
  return latents.with_features(std::move(features), channels);
}

}  // namespace earthvox
