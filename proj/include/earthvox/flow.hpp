#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "earthvox/geo.hpp"
#include "earthvox/voxel_grid.hpp"

namespace earthvox {

struct ScheduleConfig {
  int steps = 25;
  double shift = 3.0;
};

struct GuidanceConfig {
  double scale = 3.0;
};

/// Time shift t = shift * u / (1 + (shift - 1) * u); fixes 0 and 1.
double shift_time(double u, double shift);

/// steps + 1 times from 1 down to 0: u_k = k / steps for k = steps..0,
/// passed through shift_time.
std::vector<double> make_timesteps(const ScheduleConfig& cfg);

/// v_uncond + scale * (v_cond - v_uncond).
std::vector<double> cfg_combine(std::span<const double> v_uncond,
                                std::span<const double> v_cond, double scale);

/// Arguments of one velocity evaluation. state holds support.size() rows of
/// `channels` values, in the support's canonical order.
struct FieldQuery {
  const SparseVoxelGrid& support;
  std::span<const double> state;
  std::size_t channels;
  double t;
  const SparseVoxelGrid* condition;  // nullptr for the unconditional branch
};

/// Velocity of the rectified flow x_t = (1 - t) x0 + t * noise, i.e. an
/// estimate of noise - x0. This is where a trained network plugs in.
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual std::vector<double> evaluate(const FieldQuery& query) const = 0;
};

/// Called after every Euler step with the time just reached and the
/// mutable state.
using StepHook = std::function<void(double t, std::span<double> state)>;

/// Integrates from timesteps.front() (noise) to timesteps.back() (data)
/// with x <- x + (t_next - t) * v. With a condition and guidance scale other
/// than 1, v is the guided combination of the conditional and unconditional
/// evaluations.
std::vector<double> euler_sample(const VelocityField& field, const SparseVoxelGrid& support,
                                 std::vector<double> init, std::size_t channels,
                                 std::span<const double> timesteps,
                                 const GuidanceConfig& guidance = {},
                                 const SparseVoxelGrid* condition = nullptr,
                                 const StepHook& hook = {});

// ---------------------------------------------------------------------------
// Built-in fields standing in for trained networks.

/// Returns noise - x0 for a stored pairing regardless of the state.
class ConstantOracleField : public VelocityField {
 public:
  ConstantOracleField(std::vector<double> x0, std::vector<double> noise);
  std::vector<double> evaluate(const FieldQuery& query) const override;

 private:
  std::vector<double> x0_;
  std::vector<double> noise_;
};

/// Field whose flow ends on a fixed per-voxel target: v = (x - target) / t.
/// Euler integration of this field lands exactly on the target at t = 0.
class TargetField : public VelocityField {
 public:
  std::vector<double> evaluate(const FieldQuery& query) const override;

 protected:
  virtual double target(const Coord3& c, std::size_t channel) const = 0;
};

/// Target is `inside` on the voxels of a shape, `outside` elsewhere.
class ShapeOracleField : public TargetField {
 public:
  ShapeOracleField(SparseVoxelGrid shape, double inside, double outside);

 protected:
  double target(const Coord3& c, std::size_t channel) const override;

 private:
  SparseVoxelGrid shape_;
  double inside_;
  double outside_;
};

/// Target hashed from (seed, coordinate, channel), uniform in
/// [offset - amplitude, offset + amplitude].
class SeededRandomField : public TargetField {
 public:
  SeededRandomField(std::uint64_t seed, double amplitude = 1.0, double offset = 0.0);

 protected:
  double target(const Coord3& c, std::size_t channel) const override;

 private:
  std::uint64_t seed_;
  double amplitude_;
  double offset_;
};

enum class FieldKind { ConstantOracle, SeededRandom, ShapeOracle };

FieldKind parse_field_kind(std::string_view name);
std::string_view to_string(FieldKind kind);

struct FieldParams {
  std::vector<double> x0;     // constant-oracle
  std::vector<double> noise;  // constant-oracle
  std::uint64_t seed = 0;     // seeded-random
  double amplitude = 1.0;     // seeded-random
  double offset = 0.0;        // seeded-random
  SparseVoxelGrid shape;      // shape-oracle
  double inside = 1.0;        // shape-oracle
  double outside = -1.0;      // shape-oracle
};

std::unique_ptr<VelocityField> make_builtin_field(FieldKind kind, const FieldParams& params);

// ---------------------------------------------------------------------------
// Coarse-to-fine structure generation.

struct GenerationConfig {
  std::uint32_t resolution = 256;  // full-resolution L; sampling runs at L / 8
  float voxel_size = 0.56f;
  ScheduleConfig schedule;
  GuidanceConfig guidance;
  int roughen_kernel = 3;
  int roughen_factor = 2;
  double latent_threshold = 0.3;
  double latent_fraction = 0.5;
  std::size_t latent_channels = 32;
  std::uint64_t seed = 0;
};

struct GenerationDiagnostics {
  int steps = 0;
  std::size_t dense_count = 0;
  std::size_t coarse_count = 0;
  std::size_t roughened_count = 0;
  std::size_t kept_count = 0;
  bool empty = false;
};

struct GenerationResult {
  SparseVoxelGrid coarse;     // thresholded class samples
  SparseVoxelGrid roughened;  // support for latent sampling
  SparseVoxelGrid latents;    // kept voxels with their latent rows
  GenerationDiagnostics diagnostics;
};

/// Class sampling on the dense (L/8)^3 grid, threshold > 0, roughening,
/// latent sampling on the roughened set, then invalid-feature zeroing and
/// the latent magnitude filter. An empty coarse set is reported through
/// diagnostics.empty.
GenerationResult coarse_to_fine_generate(const VelocityField& class_field,
                                         const VelocityField& latent_field,
                                         const SparseVoxelGrid* condition,
                                         const GenerationConfig& cfg);

struct SlidingWindowConfig {
  std::uint32_t window = 256;  // full-resolution tile side
  std::uint32_t overlap = 64;
};

struct TileRecord {
  std::int32_t origin_x = 0;  // latent units
  std::int32_t origin_y = 0;
  GenerationDiagnostics diagnostics;
  SparseVoxelGrid latents;  // this tile's own output, before merging
};

struct SlidingWindowResult {
  SparseVoxelGrid latents;  // merged, global latent coordinates
  std::vector<TileRecord> tiles;
};

/// Tile start offsets covering [0, extent) with tiles of `window` cells
/// overlapping by at least `overlap`; the last tile is aligned to the end.
std::vector<std::int32_t> tile_starts(std::uint32_t extent, std::uint32_t window,
                                      std::uint32_t overlap);

/// Generates a scene larger than one window from a semantic map. Tiles run
/// row-major. Inside the part of a tile already generated by earlier tiles,
/// the state is reset after every Euler step to (1 - t) * known + t * noise,
/// so those voxels end exactly on the earlier result; earlier tiles win
/// when merging.
SlidingWindowResult sliding_window_generate(const SemanticMap& semantic,
                                            const SlidingWindowConfig& window,
                                            const VelocityField& class_field,
                                            const VelocityField& latent_field,
                                            const GenerationConfig& cfg);

}  // namespace earthvox
