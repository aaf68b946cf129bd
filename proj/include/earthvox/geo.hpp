#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "earthvox/voxel_grid.hpp"

namespace earthvox {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

namespace wgs84 {
inline constexpr double kSemiMajor = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kEccentricitySq = kFlattening * (2.0 - kFlattening);
}  // namespace wgs84

struct GeodeticCoord {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double height_m = 0.0;
};

Vec3 geodetic_to_ecef(const GeodeticCoord& g);

/// Rows are the east, north and up unit vectors expressed in ECEF.
Mat3 enu_rotation(const GeodeticCoord& origin);
Vec3 ecef_to_enu(const Vec3& ecef, const GeodeticCoord& origin);
Vec3 enu_to_ecef(const Vec3& enu, const GeodeticCoord& origin);

/// World-from-camera rigid transform. The camera looks down its -Z axis
/// with +Y up (OpenGL convention).
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();

  Vec3 forward() const { return -rotation.col(2); }
  Vec3 to_camera(const Vec3& world) const { return rotation.transpose() * (world - position); }
  Vec3 to_world(const Vec3& cam) const { return rotation * cam + position; }
};

struct PinholeCamera {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 180.0;
  int width = 640;
  int height = 360;
};

void validate(const CameraPose& pose, double tolerance = 1e-6);
void validate(const PinholeCamera& camera);

/// Pixel (u = column, v = row; v grows downward) of a world point, or
/// nullopt when the point is not in front of the camera.
std::optional<Eigen::Vector2d> project(const PinholeCamera& camera, const CameraPose& pose,
                                       const Vec3& world);

/// Camera-frame point for pixel (u, v) at depth d measured along -Z.
Vec3 unproject(const PinholeCamera& camera, double u, double v, double depth);

/// Unprojects every pixel with depth > 0 and voxelizes the world points with
/// floor(p / voxel_size). The result is unbounded.
SparseVoxelGrid depth_to_condition_voxels(std::span<const float> depth,
                                          const PinholeCamera& camera,
                                          const CameraPose& pose,
                                          double voxel_size = 0.56);

/// Row-major semantic id raster; 0 marks unlabeled cells.
struct SemanticMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> ids;

  std::uint8_t at(std::size_t r, std::size_t c) const { return ids[r * cols + c]; }
};

/// One voxel per labeled cell (r, c) at (r, c, L/2), carrying the id as a
/// single feature channel.
SparseVoxelGrid lift_semantic_plane(const SemanticMap& map, std::uint32_t resolution = 256);

/// Replicates a single-layer grid across every z layer of its resolution.
SparseVoxelGrid expand_condition_plane(const SparseVoxelGrid& plane);

/// Right-handed frame with -Z from eye toward target.
CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

struct TopPoseConfig {
  double altitude = 500.0;
  double outer_side = 600.0;
  double inner_side = 100.0;
  int views_per_square = 8;
};

/// Two squares of viewpoints at center.z + altitude. Viewpoints are spaced
/// evenly along each perimeter, offset half a step from the corners. Outer
/// cameras look at the center; inner cameras look at the midpoint (at ground
/// level) of the outer edge nearest to them. Outer poses come first.
std::vector<CameraPose> plan_top_pose(const Vec3& center, const TopPoseConfig& cfg = {});

struct HeightField {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double cell_size = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<float> heights;

  float max_height() const;
  /// Cell containing (x, y), clamped to the raster.
  std::size_t cell_index(double x, double y) const;
};

struct AdaLevelConfig {
  double min_altitude = 75.0;
  double top_margin = 225.0;
  double base_half_width = 300.0;
  double top_half_width = 50.0;
  int rings = 10;
  int views_per_ring = 6;
};

/// Square rings from min_altitude up to max_height + top_margin (relative to
/// center.z), shrinking linearly from base_half_width to top_half_width.
/// Cameras look at the center. Poses over a nonzero cell of `blocked`
/// (aligned with the height field) are skipped.
std::vector<CameraPose> plan_adalevel(const HeightField& field, const Vec3& center,
                                      const AdaLevelConfig& cfg = {},
                                      std::span<const std::uint8_t> blocked = {});

struct SpiralConfig {
  double turns = 3.0;
  int points = 36;
  double margin = 50.0;
  double min_altitude = 75.0;
  double start_radius = 60.0;
  double end_radius = 240.0;
};

/// Archimedean spiral descending from building_height + margin to
/// min_altitude, every camera looking at center.
std::vector<CameraPose> plan_building_spiral(const Vec3& center, double building_height,
                                             const SpiralConfig& cfg = {});

}  // namespace earthvox
