#include "earthvox/geo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "earthvox/error.hpp"

namespace earthvox {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void check_geodetic(const GeodeticCoord& g) {
  if (!(std::abs(g.latitude_deg) <= 90.0) || !(std::abs(g.longitude_deg) <= 180.0)) {
    throw Error("geodetic coordinate out of range (lat " + std::to_string(g.latitude_deg) +
                ", lon " + std::to_string(g.longitude_deg) + ")");
  }
}

std::int32_t voxel_index(double value, double voxel_size) {
  const double v = std::floor(value / voxel_size);
  if (!(v >= std::numeric_limits<std::int32_t>::min() &&
        v <= std::numeric_limits<std::int32_t>::max())) {
    throw Error("voxel index outside the 32-bit range");
  }
  return static_cast<std::int32_t>(v);
}

// Point at arc length s along the perimeter of a square of half-width h,
// walked counterclockwise from (+h, -h). Also returns the edge index
// (0: +X, 1: +Y, 2: -X, 3: -Y).
std::pair<Eigen::Vector2d, int> perimeter_point(double h, double s) {
  const double side = 2.0 * h;
  const int edge = std::min(3, static_cast<int>(std::floor(s / side)));
  const double t = s - edge * side;
  switch (edge) {
    case 0: return {{h, -h + t}, 0};
    case 1: return {{h - t, h}, 1};
    case 2: return {{-h, h - t}, 2};
    default: return {{-h + t, -h}, 3};
  }
}

std::vector<std::pair<Eigen::Vector2d, int>> square_ring(double half_width, int count) {
  std::vector<std::pair<Eigen::Vector2d, int>> out;
  if (count <= 0) return out;
  const double step = 8.0 * half_width / count;
  for (int k = 0; k < count; ++k) out.push_back(perimeter_point(half_width, (k + 0.5) * step));
  return out;
}

}  // namespace

Vec3 geodetic_to_ecef(const GeodeticCoord& g) {
  check_geodetic(g);
  const double lat = g.latitude_deg * kDegToRad;
  const double lon = g.longitude_deg * kDegToRad;
  const double sin_lat = std::sin(lat);
  const double cos_lat = std::cos(lat);
  const double n = wgs84::kSemiMajor / std::sqrt(1.0 - wgs84::kEccentricitySq * sin_lat * sin_lat);
  return {(n + g.height_m) * cos_lat * std::cos(lon),
          (n + g.height_m) * cos_lat * std::sin(lon),
          (n * (1.0 - wgs84::kEccentricitySq) + g.height_m) * sin_lat};
}

Mat3 enu_rotation(const GeodeticCoord& origin) {
  check_geodetic(origin);
  const double lat = origin.latitude_deg * kDegToRad;
  const double lon = origin.longitude_deg * kDegToRad;
  const double sl = std::sin(lat), cl = std::cos(lat);
  const double so = std::sin(lon), co = std::cos(lon);
  Mat3 r;
  r << -so, co, 0.0,
       -sl * co, -sl * so, cl,
       cl * co, cl * so, sl;
  return r;
}

Vec3 ecef_to_enu(const Vec3& ecef, const GeodeticCoord& origin) {
  return enu_rotation(origin) * (ecef - geodetic_to_ecef(origin));
}

Vec3 enu_to_ecef(const Vec3& enu, const GeodeticCoord& origin) {
  return enu_rotation(origin).transpose() * enu + geodetic_to_ecef(origin);
}

void validate(const CameraPose& pose, double tolerance) {
  const Mat3 gram = pose.rotation.transpose() * pose.rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tolerance) {
    throw Error("camera rotation is not orthonormal");
  }
  if (std::abs(pose.rotation.determinant() - 1.0) > tolerance) {
    throw Error("camera rotation is not a proper rotation");
  }
  if (!pose.position.allFinite()) throw Error("camera position is not finite");
}

void validate(const PinholeCamera& camera) {
  if (!(camera.fx > 0.0) || !(camera.fy > 0.0) || camera.width <= 0 || camera.height <= 0) {
    throw Error("pinhole camera needs positive focal lengths and dimensions");
  }
}

std::optional<Eigen::Vector2d> project(const PinholeCamera& camera, const CameraPose& pose,
                                       const Vec3& world) {
  const Vec3 c = pose.to_camera(world);
  const double depth = -c.z();
  if (!(depth > 0.0)) return std::nullopt;
  return Eigen::Vector2d(camera.cx + camera.fx * c.x() / depth,
                         camera.cy - camera.fy * c.y() / depth);
}

Vec3 unproject(const PinholeCamera& camera, double u, double v, double depth) {
  return {(u - camera.cx) / camera.fx * depth, -(v - camera.cy) / camera.fy * depth, -depth};
}

SparseVoxelGrid depth_to_condition_voxels(std::span<const float> depth,
                                          const PinholeCamera& camera,
                                          const CameraPose& pose, double voxel_size) {
  validate(camera);
  if (!(voxel_size > 0.0)) throw Error("voxel size must be positive");
  const auto w = static_cast<std::size_t>(camera.width);
  const auto h = static_cast<std::size_t>(camera.height);
  if (depth.size() != w * h) {
    throw Error("depth map has " + std::to_string(depth.size()) + " pixels, camera expects " +
                std::to_string(w * h));
  }
  std::vector<Coord3> coords;
  for (std::size_t row = 0; row < h; ++row) {
    for (std::size_t col = 0; col < w; ++col) {
      const float d = depth[row * w + col];
      if (!(d > 0.0f)) continue;
      const Vec3 p = pose.to_world(
          unproject(camera, static_cast<double>(col), static_cast<double>(row), d));
      coords.push_back({voxel_index(p.x(), voxel_size), voxel_index(p.y(), voxel_size),
                        voxel_index(p.z(), voxel_size)});
    }
  }
  return SparseVoxelGrid::canonicalize(std::move(coords),
                                       GridSpec{0, static_cast<float>(voxel_size)});
}

SparseVoxelGrid lift_semantic_plane(const SemanticMap& map, std::uint32_t resolution) {
  if (map.ids.size() != map.rows * map.cols) throw Error("semantic map size mismatch");
  if (map.rows > resolution || map.cols > resolution) {
    throw Error("semantic map " + std::to_string(map.rows) + "x" + std::to_string(map.cols) +
                " exceeds grid resolution " + std::to_string(resolution));
  }
  const auto z = static_cast<std::int32_t>(resolution / 2);
  std::vector<Coord3> coords;
  std::vector<float> ids;
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      const auto id = map.at(r, c);
      if (id == 0) continue;
      coords.push_back({static_cast<std::int32_t>(r), static_cast<std::int32_t>(c), z});
      ids.push_back(static_cast<float>(id));
    }
  }
  return SparseVoxelGrid::from_canonical(std::move(coords), std::move(ids), 1,
                                         GridSpec{resolution, 1.0f});
}

SparseVoxelGrid expand_condition_plane(const SparseVoxelGrid& plane) {
  if (!plane.bounded()) throw Error("condition plane must be bounded");
  if (plane.empty()) return plane;
  const std::int32_t z0 = plane.coords().front().z;
  for (const auto& c : plane.coords()) {
    if (c.z != z0) throw Error("condition plane spans more than one z layer");
  }
  const auto layers = static_cast<std::int32_t>(plane.resolution());
  const std::size_t ch = plane.channels();
  std::vector<Coord3> coords;
  std::vector<float> features;
  coords.reserve(plane.size() * static_cast<std::size_t>(layers));
  features.reserve(plane.size() * static_cast<std::size_t>(layers) * ch);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    const Coord3& c = plane.coords()[i];
    const auto row = plane.row(i);
    for (std::int32_t z = 0; z < layers; ++z) {
      coords.push_back({c.x, c.y, z});
      features.insert(features.end(), row.begin(), row.end());
    }
  }
  return SparseVoxelGrid::from_canonical(std::move(coords), std::move(features), ch,
                                         plane.spec());
}

CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 delta = target - eye;
  if (!(delta.norm() > 1e-12)) throw Error("look_at: eye coincides with target");
  const Vec3 forward = delta.normalized();
  const Vec3 side = forward.cross(up);
  if (!(side.norm() > 1e-9 * up.norm())) {
    throw Error("look_at: up vector is parallel to the view direction");
  }
  const Vec3 right = side.normalized();
  const Vec3 true_up = right.cross(forward).normalized();
  CameraPose pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = true_up;
  pose.rotation.col(2) = -forward;
  pose.position = eye;
  return pose;
}

std::vector<CameraPose> plan_top_pose(const Vec3& center, const TopPoseConfig& cfg) {
  if (!(cfg.outer_side > cfg.inner_side) || !(cfg.inner_side > 0.0)) {
    throw Error("top pose squares need outer_side > inner_side > 0");
  }
  const double outer_h = cfg.outer_side / 2.0;
  const double inner_h = cfg.inner_side / 2.0;
  const double z = center.z() + cfg.altitude;
  std::vector<CameraPose> poses;
  for (const auto& [xy, edge] : square_ring(outer_h, cfg.views_per_square)) {
    poses.push_back(look_at({center.x() + xy.x(), center.y() + xy.y(), z}, center));
  }
  const std::array<Eigen::Vector2d, 4> edge_mid{{{outer_h, 0.0}, {0.0, outer_h},
                                                 {-outer_h, 0.0}, {0.0, -outer_h}}};
  for (const auto& [xy, edge] : square_ring(inner_h, cfg.views_per_square)) {
    const Vec3 eye{center.x() + xy.x(), center.y() + xy.y(), z};
    const Vec3 target{center.x() + edge_mid[static_cast<std::size_t>(edge)].x(),
                      center.y() + edge_mid[static_cast<std::size_t>(edge)].y(), center.z()};
    poses.push_back(look_at(eye, target));
  }
  return poses;
}

float HeightField::max_height() const {
  if (heights.empty()) throw Error("height field is empty");
  return *std::max_element(heights.begin(), heights.end());
}

std::size_t HeightField::cell_index(double x, double y) const {
  if (rows == 0 || cols == 0) throw Error("height field is empty");
  auto clamp_cell = [this](double v, std::size_t n) {
    const double c = std::floor(v / cell_size);
    if (!(c > 0.0)) return std::size_t{0};
    return std::min(n - 1, static_cast<std::size_t>(c));
  };
  return clamp_cell(y - origin_y, rows) * cols + clamp_cell(x - origin_x, cols);
}

std::vector<CameraPose> plan_adalevel(const HeightField& field, const Vec3& center,
                                      const AdaLevelConfig& cfg,
                                      std::span<const std::uint8_t> blocked) {
  if (field.heights.size() != field.rows * field.cols) throw Error("height field size mismatch");
  if (!blocked.empty() && blocked.size() != field.heights.size()) {
    throw Error("accessibility mask does not match the height field");
  }
  if (cfg.rings < 1 || cfg.views_per_ring < 1) throw Error("adalevel needs rings and views >= 1");
  if (!(cfg.base_half_width > 0.0) || !(cfg.top_half_width > 0.0)) {
    throw Error("adalevel ring half-widths must be positive");
  }
  const double bottom = cfg.min_altitude;
  const double top = static_cast<double>(field.max_height()) + cfg.top_margin;
  std::vector<CameraPose> poses;
  for (int i = 0; i < cfg.rings; ++i) {
    const double frac = cfg.rings == 1 ? 0.0 : static_cast<double>(i) / (cfg.rings - 1);
    const double altitude = bottom + (top - bottom) * frac;
    const double half = cfg.base_half_width + (cfg.top_half_width - cfg.base_half_width) * frac;
    for (const auto& [xy, edge] : square_ring(half, cfg.views_per_ring)) {
      const Vec3 eye{center.x() + xy.x(), center.y() + xy.y(), center.z() + altitude};
      if (!blocked.empty() && blocked[field.cell_index(eye.x(), eye.y())] != 0) continue;
      poses.push_back(look_at(eye, center));
    }
  }
  return poses;
}

std::vector<CameraPose> plan_building_spiral(const Vec3& center, double building_height,
                                             const SpiralConfig& cfg) {
  if (!(building_height >= 0.0)) throw Error("building height must be non-negative");
  if (cfg.points <= 0) return {};
  if (!(cfg.start_radius > 0.0) || !(cfg.end_radius > 0.0)) {
    throw Error("spiral radii must be positive");
  }
  const double top = building_height + cfg.margin;
  std::vector<CameraPose> poses;
  poses.reserve(static_cast<std::size_t>(cfg.points));
  for (int k = 0; k < cfg.points; ++k) {
    const double frac = cfg.points == 1 ? 0.0 : static_cast<double>(k) / (cfg.points - 1);
    const double theta = 2.0 * std::numbers::pi * cfg.turns * k / cfg.points;
    const double radius = cfg.start_radius + (cfg.end_radius - cfg.start_radius) * frac;
    const double altitude = top + (cfg.min_altitude - top) * frac;
    const Vec3 eye{center.x() + radius * std::cos(theta), center.y() + radius * std::sin(theta),
                   center.z() + altitude};
    poses.push_back(look_at(eye, center));
  }
  return poses;
}

}  // namespace earthvox
