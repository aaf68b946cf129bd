#include <doctest.h>

#include <random>

#include "earthvox/error.hpp"
#include "earthvox/flow.hpp"
#include "earthvox/pss.hpp"
#include "support/oracles.hpp"

using namespace earthvox;

namespace {

// Records every evaluation so guidance plumbing can be checked.
class ProbeField : public VelocityField {
 public:
  mutable int uncond_calls = 0;
  mutable int cond_calls = 0;
  std::vector<double> evaluate(const FieldQuery& q) const override {
    (q.condition ? cond_calls : uncond_calls)++;
    return std::vector<double>(q.state.size(), q.condition ? 2.0 : 1.0);
  }
};

SparseVoxelGrid cube_target(std::uint32_t side, int lo, int hi) {
  std::vector<Coord3> c;
  for (int x = lo; x < hi; ++x)
    for (int y = lo; y < hi; ++y)
      for (int z = lo; z < hi; ++z) c.push_back({x, y, z});
  return SparseVoxelGrid::canonicalize(std::move(c), {side, 4.48f});
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("defaults") {
  const ScheduleConfig s;
  const GuidanceConfig g;
  CHECK(s.steps == 25);
  CHECK(s.shift == 3.0);
  CHECK(g.scale == 3.0);
}

TEST_CASE("shift map fixes the endpoints and is monotone") {
  for (double s : {0.5, 1.0, 3.0, 7.0}) {
    CHECK(shift_time(0.0, s) == 0.0);
    CHECK(shift_time(1.0, s) == 1.0);
    double prev = -1.0;
    for (int k = 0; k <= 100; ++k) {
      const double t = shift_time(k / 100.0, s);
      CHECK(t > prev);
      prev = t;
    }
  }
  CHECK(shift_time(0.5, 3.0) == doctest::Approx(0.75));
  CHECK_THROWS_AS(shift_time(0.5, 0.0), Error);
}

TEST_CASE("schedule shape") {
  for (int steps : {1, 5, 25}) {
    const auto ts = make_timesteps({steps, 3.0});
    REQUIRE(ts.size() == static_cast<std::size_t>(steps) + 1);
    CHECK(ts.front() == 1.0);
    CHECK(ts.back() == 0.0);
    for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] < ts[i - 1]);
    const auto flat = make_timesteps({steps, 1.0});
    for (int k = 0; k <= steps; ++k) {
      CHECK(flat[static_cast<std::size_t>(k)] == static_cast<double>(steps - k) / steps);
    }
  }
  CHECK_THROWS_AS(make_timesteps({0, 3.0}), Error);
}

TEST_CASE("guidance combination") {
  const std::vector<double> u{1.0, 0.0}, c{2.0, 1.0};
  const auto v = cfg_combine(u, c, 3.0);
  CHECK(v[0] == 4.0);
  CHECK(v[1] == 3.0);
  CHECK(cfg_combine(u, c, 1.0) == c);
  CHECK(cfg_combine(u, c, 0.0) == u);
}

TEST_CASE("constant oracle recovers x0") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd;
  const auto support = oracle::grid_from(oracle::random_keys(gen, 6, 0.3));
  const std::size_t ch = 3;
  std::vector<double> x0(support.size() * ch), noise(x0.size());
  for (auto& v : x0) v = nd(gen);
  for (auto& v : noise) v = nd(gen);
  const ConstantOracleField field(x0, noise);
  for (int steps : {1, 5, 25}) {
    const auto ts = make_timesteps({steps, 3.0});
    const auto x = euler_sample(field, support, noise, ch, ts);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - x0[i]));
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("guidance evaluates both branches only when it matters") {
  const auto support = SparseVoxelGrid::canonicalize({{0, 0, 0}}, {});
  const auto ts = make_timesteps({4, 1.0});
  ProbeField probe;
  const auto x = euler_sample(probe, support, {0.0}, 1, ts, {3.0}, &support);
  CHECK(probe.cond_calls == 4);
  CHECK(probe.uncond_calls == 4);
  // v = 1 + 3 * (2 - 1) = 4 integrated over dt = -1.
  CHECK(x[0] == doctest::Approx(-4.0));
  ProbeField plain;
  euler_sample(plain, support, {0.0}, 1, ts, {1.0}, &support);
  CHECK(plain.uncond_calls == 0);
  CHECK(plain.cond_calls == 4);
  CHECK_THROWS_AS(euler_sample(plain, support, {0.0, 1.0}, 1, ts), Error);
}

TEST_CASE("hook sees every reached time") {
  const auto support = SparseVoxelGrid::canonicalize({{0, 0, 0}}, {});
  const auto ts = make_timesteps({5, 3.0});
  std::vector<double> seen;
  ProbeField f;
  euler_sample(f, support, {0.0}, 1, ts, {}, nullptr, [&](double t, std::span<double>) { seen.push_back(t); });
  CHECK(seen == std::vector<double>(ts.begin() + 1, ts.end()));
}

TEST_CASE("field factory") {
  CHECK(parse_field_kind("shape-oracle") == FieldKind::ShapeOracle);
  CHECK(to_string(FieldKind::SeededRandom) == "seeded-random");
  CHECK_THROWS_AS(parse_field_kind("unet"), Error);
  FieldParams p;
  p.seed = 42;
  const auto a = make_builtin_field(FieldKind::SeededRandom, p);
  const auto b = make_builtin_field(FieldKind::SeededRandom, p);
  const auto support = oracle::grid_from({{0, 0, 0}, {1, 2, 3}});
  const std::vector<double> state{0.1, 0.2, 0.3, 0.4};
  const FieldQuery q{support, state, 2, 0.5, nullptr};
  CHECK(a->evaluate(q) == b->evaluate(q));
}

TEST_CASE("shape oracle reproduces a cube") {
  GenerationConfig cfg;
  cfg.resolution = 64;
  const auto target = cube_target(8, 2, 5);
  const ShapeOracleField cls(target, 1.0, -1.0);
  const ShapeOracleField lat(target, 1.0, 0.0);
  const auto res = coarse_to_fine_generate(cls, lat, nullptr, cfg);
  CHECK_FALSE(res.diagnostics.empty);
  CHECK(res.diagnostics.dense_count == 512);
  CHECK(oracle::keys(res.coarse) == oracle::keys(target));
  CHECK(iou(res.latents, target) == 1.0);
  CHECK(set_op(res.latents, res.roughened, SetOp::Difference).empty());
  CHECK(set_op(target, res.roughened, SetOp::Difference).empty());
  CHECK(latent_magnitude_filter(res.latents).size() == res.latents.size());
  CHECK(res.latents.channels() == 32);
}

TEST_CASE("empty coarse result is flagged") {
  GenerationConfig cfg;
  cfg.resolution = 32;
  const ShapeOracleField cls(SparseVoxelGrid{}, 1.0, -1.0);
  const auto res = coarse_to_fine_generate(cls, cls, nullptr, cfg);
  CHECK(res.diagnostics.empty);
  CHECK(res.latents.empty());
}

TEST_CASE("seeded generation is deterministic") {
  GenerationConfig cfg;
  cfg.resolution = 32;
  cfg.seed = 7;
  const SeededRandomField cls(7), lat(8, 1.0, 0.3);
  const auto a = coarse_to_fine_generate(cls, lat, nullptr, cfg);
  const auto b = coarse_to_fine_generate(cls, lat, nullptr, cfg);
  CHECK(a.latents == b.latents);
  CHECK(set_op(a.latents, a.roughened, SetOp::Difference).empty());
  CHECK_THROWS_AS(coarse_to_fine_generate(cls, lat, nullptr, GenerationConfig{.resolution = 30}), Error);
}

TEST_CASE("tile starts") {
  CHECK(tile_starts(32, 32, 8) == std::vector<std::int32_t>{0});
  CHECK(tile_starts(81, 32, 8) == std::vector<std::int32_t>{0, 24, 48, 49});
  CHECK(tile_starts(80, 32, 8) == std::vector<std::int32_t>{0, 24, 48});
  // 648 / 256 / 64 in full-resolution units.
  CHECK(tile_starts(648, 256, 64) == std::vector<std::int32_t>{0, 192, 384, 392});
  CHECK_THROWS_AS(tile_starts(10, 8, 8), Error);
}

TEST_CASE("sliding window reproduces a shape across tiles") {
  SemanticMap sem{160, 128, std::vector<std::uint8_t>(160 * 128, 4)};
  GenerationConfig cfg;
  cfg.schedule.steps = 5;
  std::vector<Coord3> c;
  for (int x = 1; x < 19; ++x)
    for (int y = 3; y < 14; ++y)
      for (int z = 1; z < 3; ++z) c.push_back({x, y, z});
  const auto target = SparseVoxelGrid::canonicalize(std::move(c), {20, 4.48f});
  const ShapeOracleField cls(target, 1.0, -1.0);
  const ShapeOracleField lat(target, 1.0, 0.0);
  const auto res = sliding_window_generate(sem, {64, 16}, cls, lat, cfg);
  CHECK(res.tiles.size() == 3 * 3);
  CHECK(res.latents.resolution() == 20);
  CHECK(iou(res.latents, target) == 1.0);
  CHECK_THROWS_AS(sliding_window_generate(sem, {60, 16}, cls, lat, cfg), Error);
}

TEST_CASE("sliding window overlap is frozen to earlier tiles") {
  SemanticMap sem{128, 64, std::vector<std::uint8_t>(128 * 64, 2)};
  GenerationConfig cfg;
  cfg.schedule.steps = 4;
  cfg.seed = 3;
  // Targets relative to the tile's own first voxel, so tiles disagree on
  // the overlap unless the freeze holds them to the earlier result.
  class LocalField : public VelocityField {
   public:
    std::vector<double> evaluate(const FieldQuery& q) const override {
      std::vector<double> v(q.state.size());
      if (!(q.t > 0.0)) return v;
      const std::int32_t x0 = q.support.coords().front().x;
      for (std::size_t i = 0; i < q.support.size(); ++i) {
        const auto& c = q.support.coords()[i];
        const double target = ((c.x - x0) + c.y + c.z) % 3 == 0 ? 1.0 : -1.0;
        for (std::size_t ch = 0; ch < q.channels; ++ch) {
          const std::size_t k = i * q.channels + ch;
          v[k] = (q.state[k] - target) / q.t;
        }
      }
      return v;
    }
  };
  const LocalField f;
  const auto res = sliding_window_generate(sem, {64, 32}, f, f, cfg);
  REQUIRE(res.tiles.size() == 3);
  CHECK(res.tiles[1].origin_x == 4);
  std::size_t shared = 0;
  for (std::size_t k = 1; k < res.tiles.size(); ++k) {
    const auto& later = res.tiles[k].latents;
    for (std::size_t i = 0; i < later.size(); ++i) {
      const auto& c = later.coords()[i];
      for (std::size_t j = 0; j < k; ++j) {
        const auto& earlier = res.tiles[j];
        if (c.x < earlier.origin_x || c.x >= earlier.origin_x + 8) continue;
        const auto idx = earlier.latents.find(c);
        REQUIRE(idx >= 0);
        const auto a = later.row(i), b = earlier.latents.row(static_cast<std::size_t>(idx));
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
        ++shared;
        break;
      }
    }
  }
  CHECK(shared > 0);
  // Merged rows come from the earliest tile covering each voxel.
  const auto& first = res.tiles[0].latents;
  for (std::size_t i = 0; i < first.size(); ++i) {
    const auto idx = res.latents.find(first.coords()[i]);
    REQUIRE(idx >= 0);
    const auto a = res.latents.row(static_cast<std::size_t>(idx)), b = first.row(i);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
}

}  // TEST_SUITE
