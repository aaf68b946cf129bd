#include "earthvox/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "earthvox/error.hpp"

namespace earthvox {

namespace {

void require_normals(const SparseVoxelGrid& cond) {
  if (cond.channels() != 3) {
    throw Error("normal features must have 3 channels, got " + std::to_string(cond.channels()));
  }
}

Eigen::Vector3d unit_normal(const SparseVoxelGrid& cond, std::size_t i) {
  const auto row = cond.row(i);
  Eigen::Vector3d n(row[0], row[1], row[2]);
  const double len = n.norm();
  if (!(len > 1e-12)) throw Error("voxel " + std::to_string(i) + " has a zero-length normal");
  return n / len;
}

SparseVoxelGrid filter_rows(const SparseVoxelGrid& g, const std::vector<bool>& keep) {
  std::vector<Coord3> coords;
  std::vector<float> features;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!keep[i]) continue;
    coords.push_back(g.coords()[i]);
    const auto row = g.row(i);
    features.insert(features.end(), row.begin(), row.end());
  }
  return SparseVoxelGrid::from_canonical(std::move(coords), std::move(features), g.channels(),
                                         g.spec());
}

}  // namespace

SparseVoxelGrid jagged_perturb(const SparseVoxelGrid& g, Rng& rng, JaggedMode mode) {
  const std::int64_t hi = mode == JaggedMode::Symmetric ? 1 : 0;
  std::vector<Coord3> coords;
  std::vector<float> features;
  coords.reserve(g.size());
  features.reserve(g.features().size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Coord3& c = g.coords()[i];
    const auto dx = static_cast<std::int32_t>(rng.uniform_int(-1, hi));
    const auto dy = static_cast<std::int32_t>(rng.uniform_int(-1, hi));
    const auto dz = static_cast<std::int32_t>(rng.uniform_int(-1, hi));
    const Coord3 moved{c.x + dx, c.y + dy, c.z + dz};
    if (!g.spec().contains(moved)) continue;
    coords.push_back(moved);
    const auto row = g.row(i);
    features.insert(features.end(), row.begin(), row.end());
  }
  return SparseVoxelGrid::canonicalize(std::move(coords), std::move(features), g.channels(),
                                       g.spec());
}

SparseVoxelGrid roughen(const SparseVoxelGrid& latents, int dilation_kernel,
                        int simplify_factor) {
  const SparseVoxelGrid coarse =
      simplify(morph(latents, dilation_kernel, MorphMode::Dilate), simplify_factor);
  const std::size_t ch = latents.channels();
  if (ch == 0) return coarse;
  std::vector<float> features(coarse.size() * ch, 0.0f);
  // Both coordinate lists are canonical; walk them together.
  std::size_t j = 0;
  for (std::size_t i = 0; i < coarse.size() && j < latents.size(); ++i) {
    while (j < latents.size() && latents.coords()[j] < coarse.coords()[i]) ++j;
    if (j < latents.size() && latents.coords()[j] == coarse.coords()[i]) {
      const auto row = latents.row(j);
      std::copy(row.begin(), row.end(), features.begin() + static_cast<std::ptrdiff_t>(i * ch));
    }
  }
  return coarse.with_features(std::move(features), ch);
}

std::array<Eigen::Vector2d, 2> principal_normal_axes(const SparseVoxelGrid& cond) {
  require_normals(cond);
  Eigen::Matrix2d moment = Eigen::Matrix2d::Zero();
  std::vector<Eigen::Vector2d> xy;
  xy.reserve(cond.size());
  for (std::size_t i = 0; i < cond.size(); ++i) {
    const Eigen::Vector3d n = unit_normal(cond, i);
    xy.emplace_back(n.x(), n.y());
    moment += xy.back() * xy.back().transpose();
  }
  std::array<Eigen::Vector2d, 2> axes{Eigen::Vector2d::UnitX(), Eigen::Vector2d::UnitY()};
  if (moment.trace() > 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(moment);
    // Eigenvalues ascend; largest first.
    axes[0] = solver.eigenvectors().col(1).normalized();
    axes[1] = solver.eigenvectors().col(0).normalized();
  }
  for (auto& axis : axes) {
    double projection = 0.0;
    for (const auto& v : xy) projection += v.dot(axis);
    if (projection < 0.0) axis = -axis;
  }
  return axes;
}

SparseVoxelGrid normal_drop_along(const SparseVoxelGrid& cond, const Eigen::Vector2d& direction,
                                  double threshold, int closing_kernel) {
  require_normals(cond);
  if (!(direction.norm() > 1e-12)) throw Error("drop direction must be nonzero");
  const Eigen::Vector3d dir(direction.x() / direction.norm(), direction.y() / direction.norm(), 0.0);

  std::vector<double> similarity(cond.size());
  std::vector<Coord3> marked;
  for (std::size_t i = 0; i < cond.size(); ++i) {
    similarity[i] = unit_normal(cond, i).dot(dir);
    if (similarity[i] > threshold) marked.push_back(cond.coords()[i]);
  }
  const SparseVoxelGrid marked_grid = SparseVoxelGrid::from_canonical(
      std::move(marked), {}, 0, cond.spec());
  const SparseVoxelGrid closed = morph(morph(marked_grid, closing_kernel, MorphMode::Dilate),
                                       closing_kernel, MorphMode::Erode);
  std::vector<bool> keep(cond.size(), true);
  for (std::size_t i = 0; i < cond.size(); ++i) {
    if (similarity[i] > 0.0 && closed.contains(cond.coords()[i])) keep[i] = false;
  }
  return filter_rows(cond, keep);
}

SparseVoxelGrid normal_drop(const SparseVoxelGrid& cond, Rng& rng, const NormalDropConfig& cfg) {
  const auto axes = principal_normal_axes(cond);
  const Eigen::Vector2d chosen = axes[static_cast<std::size_t>(rng.uniform_int(0, 1))];
  const double angle = rng.uniform(-cfg.noise_deg, cfg.noise_deg) * std::numbers::pi / 180.0;
  const Eigen::Vector2d noisy(std::cos(angle) * chosen.x() - std::sin(angle) * chosen.y(),
                              std::sin(angle) * chosen.x() + std::cos(angle) * chosen.y());
  return normal_drop_along(cond, noisy, cfg.threshold, cfg.closing_kernel);
}

CameraPose mirror_pose(const CameraPose& pose, int axis, double extent) {
  if (axis < 0 || axis > 2) throw Error("flip axis must be 0, 1 or 2");
  Mat3 world = Mat3::Identity();
  world(axis, axis) = -1.0;
  Mat3 camera = Mat3::Identity();
  camera(0, 0) = -1.0;
  CameraPose out;
  out.rotation = world * pose.rotation * camera;
  out.position = pose.position;
  out.position[axis] = extent - pose.position[axis];
  return out;
}

AugmentedScene flip_with_pose(const SparseVoxelGrid& g, int axis,
                              std::span<const CameraPose> poses) {
  if (axis < 0 || axis > 2) throw Error("flip axis must be 0, 1 or 2");
  if (!g.bounded()) throw Error("flip requires a bounded grid");
  const auto last = static_cast<std::int32_t>(g.resolution()) - 1;
  std::vector<Coord3> coords(g.coords().begin(), g.coords().end());
  for (auto& c : coords) {
    std::int32_t* v = axis == 0 ? &c.x : axis == 1 ? &c.y : &c.z;
    *v = last - *v;
  }
  AugmentedScene out;
  out.grid = SparseVoxelGrid::canonicalize(std::move(coords),
                                           {g.features().begin(), g.features().end()},
                                           g.channels(), g.spec());
  const double extent = static_cast<double>(g.resolution()) * g.voxel_size();
  for (const auto& pose : poses) out.poses.push_back(mirror_pose(pose, axis, extent));
  return out;
}

AugmentedScene crop_with_pose(const SparseVoxelGrid& g, const VoxelBox& box,
                              std::span<const CameraPose> poses) {
  if (!(box.min.x < box.max.x && box.min.y < box.max.y && box.min.z < box.max.z)) {
    throw Error("crop box is empty");
  }
  if (g.bounded()) {
    const auto l = static_cast<std::int32_t>(g.resolution());
    if (box.min.x < 0 || box.min.y < 0 || box.min.z < 0 || box.max.x > l || box.max.y > l ||
        box.max.z > l) {
      throw Error("crop box exceeds grid bounds");
    }
  }
  std::vector<Coord3> coords;
  std::vector<float> features;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Coord3& c = g.coords()[i];
    if (c.x < box.min.x || c.y < box.min.y || c.z < box.min.z || c.x >= box.max.x ||
        c.y >= box.max.y || c.z >= box.max.z) {
      continue;
    }
    coords.push_back({c.x - box.min.x, c.y - box.min.y, c.z - box.min.z});
    const auto row = g.row(i);
    features.insert(features.end(), row.begin(), row.end());
  }
  GridSpec spec = g.spec();
  if (spec.bounded()) {
    spec.resolution = static_cast<std::uint32_t>(std::max(
        {box.max.x - box.min.x, box.max.y - box.min.y, box.max.z - box.min.z}));
  }
  AugmentedScene out;
  out.grid = SparseVoxelGrid::from_canonical(std::move(coords), std::move(features),
                                             g.channels(), spec);
  const Vec3 shift = Vec3(box.min.x, box.min.y, box.min.z) * static_cast<double>(g.voxel_size());
  for (const auto& pose : poses) {
    CameraPose moved = pose;
    moved.position -= shift;
    out.poses.push_back(moved);
  }
  return out;
}

SparseVoxelGrid random_zero_condition(const SparseVoxelGrid& g, std::size_t n, Rng& rng) {
  const std::size_t k = std::min(n, g.size());
  std::vector<std::size_t> idx(g.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(g.size()) - 1));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<Coord3> coords;
  coords.reserve(k);
  for (std::size_t i : idx) coords.push_back(g.coords()[i]);
  std::vector<float> zeros(k * g.channels(), 0.0f);
  return SparseVoxelGrid::from_canonical(std::move(coords), std::move(zeros), g.channels(),
                                         g.spec());
}

}  // namespace earthvox
