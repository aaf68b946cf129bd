#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "earthvox/aggregate.hpp"
#include "earthvox/dataset.hpp"
#include "earthvox/flow.hpp"
#include "earthvox/geo.hpp"

namespace earthvox {

// Flat little-endian arrays without a header.
std::vector<float> read_f32(const std::filesystem::path& path);
std::vector<std::int32_t> read_i32(const std::filesystem::path& path);
std::vector<std::uint8_t> read_u8(const std::filesystem::path& path);
void write_f32(std::span<const float> values, const std::filesystem::path& path);
void write_i32(std::span<const std::int32_t> values, const std::filesystem::path& path);
void write_u8(std::span<const std::uint8_t> values, const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::json& value, const std::filesystem::path& path);

/// {position:[x,y,z], rotation:[9 row-major], fx, fy, cx, cy, width, height}
nlohmann::json pose_to_json(const CameraPose& pose, const PinholeCamera& camera);
std::pair<CameraPose, PinholeCamera> pose_from_json(const nlohmann::json& j);
nlohmann::json poses_to_json(std::span<const CameraPose> poses, const PinholeCamera& camera);

/// One {id, max_height, source} object per non-blank line.
std::vector<SceneRecord> read_manifest(const std::filesystem::path& path);

/// Height field: JSON header {rows, cols, cell_size, origin:[x,y]} next to a
/// raw f32 raster named by the header's "data" key (relative to the header),
/// or `<header stem>.f32` when absent. A raw .bin/.f32 path is accepted with
/// a sibling `.json` header.
HeightField read_height_field(const std::filesystem::path& path);
void write_height_field(const HeightField& field, const std::filesystem::path& header_path);

/// RGB PNG decoded through the semantic palette. Black is unlabeled; any
/// other color outside the palette is an error.
SemanticMap read_semantic_png(const std::filesystem::path& path);
void write_semantic_png(const SemanticMap& map, const std::filesystem::path& path);

/// Directory holding manifest.json plus flat arrays:
/// {
///   "height": H, "width": W, "channels": F,
///   "elements": {"count": N, "positions": "pos.f32", "normals": "nrm.f32"},
///   "config": {"z_far": 2.0, "tau_s": 3.0, "tau_d": 3.0, "eps": 1e-6},   (optional)
///   "voxels": "grid.svx",                                                  (optional)
///   "views": [{"features": "v0.f32", "depth": "v0_depth.f32",
///              "index": "v0_index.i32", "mask": "v0_mask.u8",            (mask optional)
///              "origin": [x, y, z]  or  "c2w": [16 row-major]}]
/// }
struct ViewScene {
  std::vector<ViewSample> views;
  ElementGeometry elements;
  AggregationConfig config;
  std::filesystem::path voxels;  // empty when absent
};
ViewScene read_view_scene(const std::filesystem::path& dir);
void write_view_scene(const ViewScene& scene, const std::filesystem::path& dir);

nlohmann::json diagnostics_to_json(const GenerationDiagnostics& d);

}  // namespace earthvox
