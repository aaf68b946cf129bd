#include "earthvox/voxel_grid.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "earthvox/error.hpp"

namespace earthvox {

namespace {

std::string to_string(const Coord3& c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + "," +
         std::to_string(c.z) + ")";
}

void check_bounds(std::span<const Coord3> coords, const GridSpec& spec) {
  if (!spec.bounded()) return;
  for (const auto& c : coords) {
    if (!spec.contains(c)) {
      throw Error("coordinate " + to_string(c) + " outside grid of resolution " +
                  std::to_string(spec.resolution));
    }
  }
}

// Sorted unique coordinates, no features.
SparseVoxelGrid from_unsorted(std::vector<Coord3> coords, GridSpec spec) {
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  return SparseVoxelGrid::from_canonical(std::move(coords), {}, 0, spec);
}

}  // namespace

bool GridSpec::contains(const Coord3& c) const {
  if (!bounded()) return true;
  const auto l = static_cast<std::int64_t>(resolution);
  return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < l && c.y < l && c.z < l;
}

SparseVoxelGrid SparseVoxelGrid::canonicalize(std::vector<Coord3> coords,
                                              std::vector<float> features,
                                              std::size_t channels,
                                              GridSpec spec) {
  if (channels == 0 && !features.empty()) {
    throw Error("features given with zero channels");
  }
  if (channels != 0 && features.size() != coords.size() * channels) {
    throw Error("feature rows (" + std::to_string(features.size() / channels) +
                ") do not match coordinate count (" +
                std::to_string(coords.size()) + ")");
  }
  check_bounds(coords, spec);

  std::vector<std::size_t> order(coords.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return coords[a] < coords[b];
  });

  SparseVoxelGrid g(spec);
  g.channels_ = channels;
  g.coords_.reserve(coords.size());
  g.features_.reserve(features.size());
  for (std::size_t idx : order) {
    if (!g.coords_.empty() && g.coords_.back() == coords[idx]) continue;
    g.coords_.push_back(coords[idx]);
    if (channels != 0) {
      const auto* src = features.data() + idx * channels;
      g.features_.insert(g.features_.end(), src, src + channels);
    }
  }
  return g;
}

SparseVoxelGrid SparseVoxelGrid::canonicalize(std::vector<Coord3> coords,
                                              GridSpec spec) {
  return canonicalize(std::move(coords), {}, 0, spec);
}

SparseVoxelGrid SparseVoxelGrid::from_canonical(std::vector<Coord3> coords,
                                                std::vector<float> features,
                                                std::size_t channels,
                                                GridSpec spec) {
  if (features.size() != coords.size() * channels) {
    throw Error("feature matrix does not match coordinate count");
  }
  for (std::size_t i = 1; i < coords.size(); ++i) {
    if (!(coords[i - 1] < coords[i])) {
      throw Error("coordinates are non-canonical at index " + std::to_string(i));
    }
  }
  check_bounds(coords, spec);
  SparseVoxelGrid g(spec);
  g.coords_ = std::move(coords);
  g.features_ = std::move(features);
  g.channels_ = channels;
  return g;
}

std::ptrdiff_t SparseVoxelGrid::find(const Coord3& c) const {
  auto it = std::lower_bound(coords_.begin(), coords_.end(), c);
  if (it == coords_.end() || *it != c) return -1;
  return it - coords_.begin();
}

SparseVoxelGrid SparseVoxelGrid::with_features(std::vector<float> features,
                                               std::size_t channels) const {
  if (features.size() != coords_.size() * channels) {
    throw Error("feature matrix does not match coordinate count");
  }
  SparseVoxelGrid g = *this;
  g.features_ = std::move(features);
  g.channels_ = channels;
  return g;
}

SparseVoxelGrid SparseVoxelGrid::without_features() const {
  return with_features({}, 0);
}

SparseVoxelGrid SparseVoxelGrid::with_spec(GridSpec spec) const {
  check_bounds(coords_, spec);
  SparseVoxelGrid g = *this;
  g.spec_ = spec;
  return g;
}

SparseVoxelGrid set_op(const SparseVoxelGrid& a, const SparseVoxelGrid& b,
                       SetOp op) {
  std::vector<Coord3> out;
  auto ac = a.coords();
  auto bc = b.coords();
  auto sink = std::back_inserter(out);
  switch (op) {
    case SetOp::Union:
      out.reserve(ac.size() + bc.size());
      std::set_union(ac.begin(), ac.end(), bc.begin(), bc.end(), sink);
      break;
    case SetOp::Intersection:
      std::set_intersection(ac.begin(), ac.end(), bc.begin(), bc.end(), sink);
      break;
    case SetOp::Difference:
      std::set_difference(ac.begin(), ac.end(), bc.begin(), bc.end(), sink);
      break;
  }
  GridSpec spec = a.spec();
  // A union may hold b's voxels outside a's bounds.
  if (op == SetOp::Union && spec.bounded()) {
    spec.resolution = b.bounded() ? std::max(spec.resolution, b.resolution()) : 0;
  }
  return SparseVoxelGrid::from_canonical(std::move(out), {}, 0, spec);
}

SparseVoxelGrid morph(const SparseVoxelGrid& g, int kernel, MorphMode mode) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw Error("morphology kernel must be odd and positive, got " +
                std::to_string(kernel));
  }
  const int r = kernel / 2;
  const GridSpec& spec = g.spec();

  if (mode == MorphMode::Dilate) {
    std::vector<Coord3> out;
    out.reserve(g.size() * static_cast<std::size_t>(kernel) * kernel * kernel);
    for (const auto& c : g.coords()) {
      for (int dx = -r; dx <= r; ++dx)
        for (int dy = -r; dy <= r; ++dy)
          for (int dz = -r; dz <= r; ++dz) {
            Coord3 n{c.x + dx, c.y + dy, c.z + dz};
            if (spec.contains(n)) out.push_back(n);
          }
    }
    return from_unsorted(std::move(out), spec);
  }

  // Cells outside a bounded grid do not count against a voxel.
  std::vector<Coord3> out;
  for (const auto& c : g.coords()) {
    bool full = true;
    for (int dx = -r; dx <= r && full; ++dx)
      for (int dy = -r; dy <= r && full; ++dy)
        for (int dz = -r; dz <= r && full; ++dz) {
          Coord3 n{c.x + dx, c.y + dy, c.z + dz};
          full = !spec.contains(n) || g.contains(n);
        }
    if (full) out.push_back(c);
  }
  return SparseVoxelGrid::from_canonical(std::move(out), {}, 0, spec);
}

SparseVoxelGrid downsample_coords(const SparseVoxelGrid& g, int factor) {
  if (factor < 2) throw Error("downsample factor must be >= 2");
  std::vector<Coord3> out;
  out.reserve(g.size());
  for (const auto& c : g.coords()) {
    out.push_back({floor_div(c.x, factor), floor_div(c.y, factor),
                   floor_div(c.z, factor)});
  }
  GridSpec spec = g.spec();
  if (spec.bounded()) {
    spec.resolution = (spec.resolution + factor - 1) / static_cast<std::uint32_t>(factor);
  }
  spec.voxel_size *= static_cast<float>(factor);
  return from_unsorted(std::move(out), spec);
}

SparseVoxelGrid upsample_coords(const SparseVoxelGrid& g, int factor) {
  if (factor < 2) throw Error("upsample factor must be >= 2");
  std::vector<Coord3> out;
  out.reserve(g.size() * static_cast<std::size_t>(factor) * factor * factor);
  for (const auto& c : g.coords()) {
    for (int dx = 0; dx < factor; ++dx)
      for (int dy = 0; dy < factor; ++dy)
        for (int dz = 0; dz < factor; ++dz)
          out.push_back({c.x * factor + dx, c.y * factor + dy, c.z * factor + dz});
  }
  GridSpec spec = g.spec();
  spec.resolution *= static_cast<std::uint32_t>(factor);
  spec.voxel_size /= static_cast<float>(factor);
  std::sort(out.begin(), out.end());
  return SparseVoxelGrid::from_canonical(std::move(out), {}, 0, spec);
}

SparseVoxelGrid simplify(const SparseVoxelGrid& g, int factor) {
  if (factor < 2) throw Error("simplify factor must be >= 2");
  const SparseVoxelGrid up = upsample_coords(downsample_coords(g, factor), factor);
  const GridSpec& spec = g.spec();
  if (!spec.bounded() || spec.resolution % static_cast<std::uint32_t>(factor) == 0) {
    return SparseVoxelGrid::from_canonical({up.coords().begin(), up.coords().end()},
                                           {}, 0, spec);
  }
  // L not divisible by the factor: children past the last full block are clipped.
  std::vector<Coord3> kept;
  kept.reserve(up.size());
  for (const auto& c : up.coords()) {
    if (spec.contains(c)) kept.push_back(c);
  }
  return SparseVoxelGrid::from_canonical(std::move(kept), {}, 0, spec);
}

double iou(const SparseVoxelGrid& a, const SparseVoxelGrid& b) {
  auto ac = a.coords();
  auto bc = b.coords();
  std::size_t inter = 0;
  auto i = ac.begin();
  auto j = bc.begin();
  while (i != ac.end() && j != bc.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = ac.size() + bc.size() - inter;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double occupancy_accuracy(std::span<const std::uint8_t> predicted,
                          std::span<const std::uint8_t> truth) {
  if (predicted.size() != truth.size()) {
    throw Error("label vectors differ in length (" +
                std::to_string(predicted.size()) + " vs " +
                std::to_string(truth.size()) + ")");
  }
  if (predicted.empty()) return 1.0;
  std::size_t equal = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    equal += (predicted[i] != 0) == (truth[i] != 0) ? 1 : 0;
  }
  return static_cast<double>(equal) / static_cast<double>(predicted.size());
}

std::vector<Coord3> dense_coords(std::uint32_t side) {
  std::vector<Coord3> out;
  const auto s = static_cast<std::int32_t>(side);
  out.reserve(static_cast<std::size_t>(side) * side * side);
  for (std::int32_t x = 0; x < s; ++x)
    for (std::int32_t y = 0; y < s; ++y)
      for (std::int32_t z = 0; z < s; ++z) out.push_back({x, y, z});
  return out;
}

}  // namespace earthvox
