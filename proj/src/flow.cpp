#include "earthvox/flow.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "earthvox/augment.hpp"
#include "earthvox/error.hpp"
#include "earthvox/pss.hpp"
#include "earthvox/rng.hpp"

namespace earthvox {

double shift_time(double u, double shift) {
  if (!(shift > 0.0)) throw Error("schedule shift must be positive");
  return shift * u / (1.0 + (shift - 1.0) * u);
}

std::vector<double> make_timesteps(const ScheduleConfig& cfg) {
  if (cfg.steps < 1) throw Error("schedule needs at least one step");
  std::vector<double> ts;
  ts.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  for (int k = cfg.steps; k >= 0; --k) {
    const double u = static_cast<double>(k) / static_cast<double>(cfg.steps);
    ts.push_back(shift_time(u, cfg.shift));
  }
  return ts;
}

std::vector<double> cfg_combine(std::span<const double> v_uncond,
                                std::span<const double> v_cond, double scale) {
  if (v_uncond.size() != v_cond.size()) {
    throw Error("guidance branches differ in shape (" + std::to_string(v_uncond.size()) +
                " vs " + std::to_string(v_cond.size()) + ")");
  }
  std::vector<double> out(v_cond.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = v_uncond[i] + scale * (v_cond[i] - v_uncond[i]);
  }
  return out;
}

std::vector<double> euler_sample(const VelocityField& field, const SparseVoxelGrid& support,
                                 std::vector<double> init, std::size_t channels,
                                 std::span<const double> timesteps,
                                 const GuidanceConfig& guidance,
                                 const SparseVoxelGrid* condition, const StepHook& hook) {
  const std::size_t expected = support.size() * channels;
  if (init.size() != expected) {
    throw Error("initial state has " + std::to_string(init.size()) + " values, expected " +
                std::to_string(expected));
  }
  if (guidance.scale < 0.0) throw Error("guidance scale must be non-negative");
  std::vector<double> x = std::move(init);
  auto eval = [&](double t, const SparseVoxelGrid* cond) {
    auto v = field.evaluate(FieldQuery{support, x, channels, t, cond});
    if (v.size() != expected) {
      throw Error("velocity field returned " + std::to_string(v.size()) + " values, expected " +
                  std::to_string(expected));
    }
    return v;
  };
  for (std::size_t k = 0; k + 1 < timesteps.size(); ++k) {
    const double t = timesteps[k];
    const double dt = timesteps[k + 1] - t;
    std::vector<double> v;
    if (condition == nullptr || guidance.scale == 1.0) {
      v = eval(t, condition);
    } else {
      v = cfg_combine(eval(t, nullptr), eval(t, condition), guidance.scale);
    }
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += dt * v[i];
    if (hook) hook(timesteps[k + 1], x);
  }
  return x;
}

ConstantOracleField::ConstantOracleField(std::vector<double> x0, std::vector<double> noise)
    : x0_(std::move(x0)), noise_(std::move(noise)) {
  if (x0_.size() != noise_.size()) throw Error("constant oracle pairing has mismatched sizes");
}

std::vector<double> ConstantOracleField::evaluate(const FieldQuery& query) const {
  if (query.state.size() != x0_.size()) {
    throw Error("constant oracle was built for " + std::to_string(x0_.size()) +
                " values, queried with " + std::to_string(query.state.size()));
  }
  std::vector<double> v(x0_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = noise_[i] - x0_[i];
  return v;
}

std::vector<double> TargetField::evaluate(const FieldQuery& query) const {
  std::vector<double> v(query.state.size(), 0.0);
  if (!(query.t > 0.0)) return v;
  for (std::size_t i = 0; i < query.support.size(); ++i) {
    const Coord3& c = query.support.coords()[i];
    for (std::size_t ch = 0; ch < query.channels; ++ch) {
      const std::size_t k = i * query.channels + ch;
      v[k] = (query.state[k] - target(c, ch)) / query.t;
    }
  }
  return v;
}

ShapeOracleField::ShapeOracleField(SparseVoxelGrid shape, double inside, double outside)
    : shape_(std::move(shape)), inside_(inside), outside_(outside) {}

double ShapeOracleField::target(const Coord3& c, std::size_t) const {
  return shape_.contains(c) ? inside_ : outside_;
}

SeededRandomField::SeededRandomField(std::uint64_t seed, double amplitude, double offset)
    : seed_(seed), amplitude_(amplitude), offset_(offset) {}

double SeededRandomField::target(const Coord3& c, std::size_t channel) const {
  std::uint64_t h = mix64(seed_);
  h = mix64(h ^ static_cast<std::uint32_t>(c.x));
  h = mix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.y)) << 20));
  h = mix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.z)) << 40));
  h = mix64(h ^ channel);
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return offset_ + amplitude_ * (2.0 * u - 1.0);
}

FieldKind parse_field_kind(std::string_view name) {
  if (name == "constant-oracle") return FieldKind::ConstantOracle;
  if (name == "seeded-random") return FieldKind::SeededRandom;
  if (name == "shape-oracle") return FieldKind::ShapeOracle;
  throw Error("unknown field kind '" + std::string(name) + "'");
}

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::ConstantOracle: return "constant-oracle";
    case FieldKind::SeededRandom: return "seeded-random";
    case FieldKind::ShapeOracle: return "shape-oracle";
  }
  return "unknown";
}

std::unique_ptr<VelocityField> make_builtin_field(FieldKind kind, const FieldParams& params) {
  switch (kind) {
    case FieldKind::ConstantOracle:
      return std::make_unique<ConstantOracleField>(params.x0, params.noise);
    case FieldKind::SeededRandom:
      return std::make_unique<SeededRandomField>(params.seed, params.amplitude, params.offset);
    case FieldKind::ShapeOracle:
      return std::make_unique<ShapeOracleField>(params.shape, params.inside, params.outside);
  }
  throw Error("unknown field kind");
}

namespace {

struct TileBox {
  std::int32_t x0 = 0;
  std::int32_t y0 = 0;
  std::int32_t side = 0;

  bool contains_xy(const Coord3& c) const {
    return c.x >= x0 && c.x < x0 + side && c.y >= y0 && c.y < y0 + side;
  }
};

// Values produced by earlier tiles of a sliding-window run.
struct InpaintPrior {
  std::vector<TileBox> covered;
  std::map<Coord3, double> class_values;
  std::map<Coord3, std::vector<float>> latent_rows;

  bool covers(const Coord3& c) const {
    return std::any_of(covered.begin(), covered.end(),
                       [&](const TileBox& b) { return b.contains_xy(c); });
  }
};

struct TileOutput {
  GenerationResult result;
  SparseVoxelGrid dense;
  std::vector<double> class_values;
  SparseVoxelGrid zeroed;  // roughened support with invalid rows zeroed
};

// Builds a hook that freezes the covered voxels to their re-noised known values.
StepHook freeze_hook(std::vector<std::size_t> rows, std::vector<double> known,
                     std::vector<double> noise, std::size_t channels) {
  if (rows.empty()) return {};
  return [rows = std::move(rows), known = std::move(known), noise = std::move(noise),
          channels](double t, std::span<double> state) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t ch = 0; ch < channels; ++ch) {
        const std::size_t src = r * channels + ch;
        state[rows[r] * channels + ch] = (1.0 - t) * known[src] + t * noise[src];
      }
    }
  };
}

TileOutput generate_tile(const VelocityField& class_field, const VelocityField& latent_field,
                         const SparseVoxelGrid* condition, const GenerationConfig& cfg,
                         const TileBox& box, const GridSpec& spec, Rng& rng,
                         const InpaintPrior* prior) {
  const auto side = static_cast<std::uint32_t>(box.side);
  const std::vector<double> timesteps = make_timesteps(cfg.schedule);

  std::vector<Coord3> dense_coords_global;
  dense_coords_global.reserve(static_cast<std::size_t>(side) * side * side);
  for (const auto& c : dense_coords(side)) {
    dense_coords_global.push_back({c.x + box.x0, c.y + box.y0, c.z});
  }
  TileOutput out;
  out.dense = SparseVoxelGrid::from_canonical(std::move(dense_coords_global), {}, 0, spec);

  // Coarse stage: one channel per dense cell.
  std::vector<double> class_noise(out.dense.size());
  for (auto& v : class_noise) v = rng.normal();
  StepHook class_hook;
  if (prior != nullptr) {
    std::vector<std::size_t> rows;
    std::vector<double> known, noise;
    for (std::size_t i = 0; i < out.dense.size(); ++i) {
      const Coord3& c = out.dense.coords()[i];
      if (!prior->covers(c)) continue;
      const auto it = prior->class_values.find(c);
      rows.push_back(i);
      known.push_back(it != prior->class_values.end() ? it->second : 0.0);
      noise.push_back(class_noise[i]);
    }
    class_hook = freeze_hook(std::move(rows), std::move(known), std::move(noise), 1);
  }
  out.class_values = euler_sample(class_field, out.dense, class_noise, 1, timesteps,
                                  cfg.guidance, condition, class_hook);

  GenerationResult& res = out.result;
  res.diagnostics.steps = cfg.schedule.steps;
  res.diagnostics.dense_count = out.dense.size();
  {
    const SparseVoxelGrid local = coarse_threshold(std::span<const double>(out.class_values), side);
    std::vector<Coord3> coords;
    coords.reserve(local.size());
    for (const auto& c : local.coords()) coords.push_back({c.x + box.x0, c.y + box.y0, c.z});
    res.coarse = SparseVoxelGrid::from_canonical(std::move(coords), {}, 0, spec);
  }
  res.diagnostics.coarse_count = res.coarse.size();
  const std::size_t channels = cfg.latent_channels;
  if (res.coarse.empty()) {
    res.diagnostics.empty = true;
    res.roughened = SparseVoxelGrid(spec);
    res.latents = SparseVoxelGrid::from_canonical({}, {}, channels, spec);
    out.zeroed = res.latents;
    return out;
  }

  // Roughen, clipped to the tile so the support never leaks into neighbors.
  {
    const SparseVoxelGrid rough = roughen(res.coarse, cfg.roughen_kernel, cfg.roughen_factor);
    std::vector<Coord3> coords;
    coords.reserve(rough.size());
    for (const auto& c : rough.coords()) {
      if (box.contains_xy(c) && c.z >= 0 && c.z < box.side) coords.push_back(c);
    }
    res.roughened = SparseVoxelGrid::from_canonical(std::move(coords), {}, 0, spec);
  }
  res.diagnostics.roughened_count = res.roughened.size();

  // Fine stage: latent channels on the roughened support.
  std::vector<double> latent_noise(res.roughened.size() * channels);
  for (auto& v : latent_noise) v = rng.normal();
  StepHook latent_hook;
  if (prior != nullptr) {
    std::vector<std::size_t> rows;
    std::vector<double> known, noise;
    for (std::size_t i = 0; i < res.roughened.size(); ++i) {
      const Coord3& c = res.roughened.coords()[i];
      if (!prior->covers(c)) continue;
      rows.push_back(i);
      const auto it = prior->latent_rows.find(c);
      for (std::size_t ch = 0; ch < channels; ++ch) {
        known.push_back(it != prior->latent_rows.end() ? static_cast<double>(it->second[ch]) : 0.0);
        noise.push_back(latent_noise[i * channels + ch]);
      }
    }
    latent_hook = freeze_hook(std::move(rows), std::move(known), std::move(noise), channels);
  }
  const std::vector<double> latent_values =
      euler_sample(latent_field, res.roughened, latent_noise, channels, timesteps, cfg.guidance,
                   condition, latent_hook);
  std::vector<float> rows(latent_values.begin(), latent_values.end());
  const SparseVoxelGrid sampled = res.roughened.with_features(std::move(rows), channels);

  res.latents = latent_magnitude_filter(sampled, cfg.latent_threshold, cfg.latent_fraction);
  out.zeroed = zero_invalid_features(sampled, res.latents);
  res.diagnostics.kept_count = res.latents.size();
  return out;
}

std::uint32_t latent_side(const GenerationConfig& cfg) {
  if (cfg.resolution < 8 || cfg.resolution % 8 != 0) {
    throw Error("generation resolution must be a positive multiple of 8");
  }
  if (cfg.latent_channels == 0) throw Error("latent channel count must be positive");
  return cfg.resolution / 8;
}

}  // namespace

GenerationResult coarse_to_fine_generate(const VelocityField& class_field,
                                         const VelocityField& latent_field,
                                         const SparseVoxelGrid* condition,
                                         const GenerationConfig& cfg) {
  const std::uint32_t side = latent_side(cfg);
  Rng rng(cfg.seed);
  const TileBox box{0, 0, static_cast<std::int32_t>(side)};
  const GridSpec spec{side, cfg.voxel_size * 8.0f};
  return generate_tile(class_field, latent_field, condition, cfg, box, spec, rng, nullptr).result;
}

std::vector<std::int32_t> tile_starts(std::uint32_t extent, std::uint32_t window,
                                      std::uint32_t overlap) {
  if (window == 0 || overlap >= window) throw Error("tile overlap must be smaller than the window");
  if (extent <= window) return {0};
  const std::uint32_t stride = window - overlap;
  const std::uint32_t span = extent - window;
  const std::uint32_t count = (span + stride - 1) / stride + 1;
  std::vector<std::int32_t> starts;
  for (std::uint32_t k = 0; k + 1 < count; ++k) starts.push_back(static_cast<std::int32_t>(k * stride));
  starts.push_back(static_cast<std::int32_t>(span));
  return starts;
}

SlidingWindowResult sliding_window_generate(const SemanticMap& semantic,
                                            const SlidingWindowConfig& window,
                                            const VelocityField& class_field,
                                            const VelocityField& latent_field,
                                            const GenerationConfig& cfg) {
  if (window.window % 8 != 0 || window.overlap % 8 != 0) {
    throw Error("window and overlap must be multiples of 8");
  }
  if (window.overlap >= window.window) throw Error("overlap must be smaller than the window");
  if (semantic.rows == 0 || semantic.cols == 0) throw Error("semantic map is empty");
  if (semantic.ids.size() != semantic.rows * semantic.cols) throw Error("semantic map size mismatch");

  GenerationConfig tile_cfg = cfg;
  tile_cfg.resolution = window.window;
  const std::uint32_t side = latent_side(tile_cfg);
  const std::uint32_t overlap = window.overlap / 8;
  const auto extent_x = static_cast<std::uint32_t>((semantic.rows + 7) / 8);
  const auto extent_y = static_cast<std::uint32_t>((semantic.cols + 7) / 8);
  const GridSpec spec{std::max({extent_x, extent_y, side}), cfg.voxel_size * 8.0f};

  Rng rng(cfg.seed);
  InpaintPrior prior;
  std::map<Coord3, std::vector<float>> merged;
  SlidingWindowResult result;
  const std::size_t channels = cfg.latent_channels;

  for (std::int32_t x0 : tile_starts(extent_x, side, overlap)) {
    for (std::int32_t y0 : tile_starts(extent_y, side, overlap)) {
      // Condition: the tile's crop of the semantic map, lifted at tile scale.
      SemanticMap crop;
      const std::size_t r0 = static_cast<std::size_t>(x0) * 8;
      const std::size_t c0 = static_cast<std::size_t>(y0) * 8;
      crop.rows = std::min<std::size_t>(window.window, semantic.rows - std::min(r0, semantic.rows));
      crop.cols = std::min<std::size_t>(window.window, semantic.cols - std::min(c0, semantic.cols));
      crop.ids.reserve(crop.rows * crop.cols);
      for (std::size_t r = 0; r < crop.rows; ++r)
        for (std::size_t c = 0; c < crop.cols; ++c) crop.ids.push_back(semantic.at(r0 + r, c0 + c));
      const SparseVoxelGrid condition = lift_semantic_plane(crop, window.window);

      const TileBox box{x0, y0, static_cast<std::int32_t>(side)};
      const bool first = prior.covered.empty();
      TileOutput tile = generate_tile(class_field, latent_field, &condition, tile_cfg, box, spec,
                                      rng, first ? nullptr : &prior);

      for (std::size_t i = 0; i < tile.result.latents.size(); ++i) {
        const Coord3& c = tile.result.latents.coords()[i];
        if (prior.covers(c)) continue;
        const auto row = tile.result.latents.row(i);
        merged.emplace(c, std::vector<float>(row.begin(), row.end()));
      }
      for (std::size_t i = 0; i < tile.dense.size(); ++i) {
        prior.class_values.emplace(tile.dense.coords()[i], tile.class_values[i]);
      }
      for (std::size_t i = 0; i < tile.zeroed.size(); ++i) {
        const Coord3& c = tile.zeroed.coords()[i];
        if (prior.covers(c)) continue;
        const auto row = tile.zeroed.row(i);
        prior.latent_rows.emplace(c, std::vector<float>(row.begin(), row.end()));
      }
      prior.covered.push_back(box);
      result.tiles.push_back({x0, y0, tile.result.diagnostics, tile.result.latents});
    }
  }

  std::vector<Coord3> coords;
  std::vector<float> features;
  coords.reserve(merged.size());
  features.reserve(merged.size() * channels);
  for (const auto& [c, row] : merged) {
    coords.push_back(c);
    features.insert(features.end(), row.begin(), row.end());
  }
  result.latents = SparseVoxelGrid::from_canonical(std::move(coords), std::move(features),
                                                   channels, spec);
  return result;
}

}  // namespace earthvox
