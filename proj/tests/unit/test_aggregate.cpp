#include <doctest.h>

#include <random>

#include "earthvox/aggregate.hpp"
#include "earthvox/error.hpp"
#include "support/oracles.hpp"

using namespace earthvox;

namespace {

double max_rel_error(const std::vector<float>& got, const std::vector<double>& want) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double denom = std::max(std::abs(want[i]), 1e-8);
    worst = std::max(worst, std::abs(static_cast<double>(got[i]) - want[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_SUITE("aggregate") {

TEST_CASE("defaults follow the fusion listing") {
  const AggregationConfig cfg;
  CHECK(cfg.z_far == 2.0);
  CHECK(cfg.tau_s == 3.0);
  CHECK(cfg.tau_d == 3.0);
  CHECK(cfg.eps == 1e-6);
}

TEST_CASE("score terms") {
  CHECK(distance_score(0.0, 2.0) == 1.0);
  CHECK(distance_score(1.0, 2.0) == 0.5);
  CHECK(distance_score(5.0, 2.0) == 0.0);
  CHECK(distance_score(-1.0, 2.0) == 1.0);
  CHECK(view_score({0, 0, 1}, {0, 0, -1}) == 1.0);
  CHECK(view_score({1, 0, 0}, {0, 0, 1}) == 0.0);
  CHECK_THROWS_AS(view_score({0, 0, 2}, {0, 0, 1}), Error);
  CHECK(score_power(0.5, 3.0) == doctest::Approx(0.125));
}

TEST_CASE("a single view yields its own weight-normalized features") {
  ViewSample v;
  v.features = FeatureMap(1, 2, 2);
  v.features.data = {1.0f, 2.0f, 3.0f, 4.0f};
  v.depth = {0.5f, 1.0f};
  v.element_index = {0, 1};
  v.origin = {0.0, 0.0, 10.0};
  ElementGeometry el;
  el.positions = {{0, 0, 0}, {0, 0, 0}};
  el.normals = {{0, 0, 1}, {0, 0, 1}};
  const std::vector<ViewSample> views{v};
  const auto out = scatter_aggregate(views, el);
  const double w0 = std::pow(0.75, 3.0), w1 = std::pow(0.5, 3.0);
  CHECK(out[0] == doctest::Approx(1.0 * w0 / (w0 + 1e-6)).epsilon(1e-7));
  CHECK(out[1] == doctest::Approx(2.0 * w0 / (w0 + 1e-6)).epsilon(1e-7));
  CHECK(out[2] == doctest::Approx(3.0 * w1 / (w1 + 1e-6)).epsilon(1e-7));
  CHECK(out[3] == doctest::Approx(4.0 * w1 / (w1 + 1e-6)).epsilon(1e-7));
}

TEST_CASE("matches the brute-force loop, with and without masks") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 8; ++trial) {
    auto [views, el] = oracle::random_scene(gen, 1 + trial % 5, 200, 32, 32, 4, trial % 2 == 1);
    AggregationStats stats;
    const auto got = scatter_aggregate(views, el, {}, 1, &stats);
    CHECK(max_rel_error(got, oracle::brute_aggregate(views, el, {})) < 1e-5);
    CHECK(stats.contributions_per_view.size() == views.size());
  }
}

TEST_CASE("result does not depend on the thread count") {
  std::mt19937_64 gen(2);
  auto [views, el] = oracle::random_scene(gen, 5, 300, 16, 16, 3);
  const auto one = scatter_aggregate(views, el, {}, 1);
  for (unsigned t : {2u, 3u, 8u}) CHECK(scatter_aggregate(views, el, {}, t) == one);
}

TEST_CASE("elements never hit stay zero") {
  std::mt19937_64 gen(5);
  auto [views, el] = oracle::random_scene(gen, 2, 10, 4, 4, 2);
  for (auto& v : views)
    for (auto& i : v.element_index) i = (i == 3) ? -1 : i;
  const auto out = scatter_aggregate(views, el);
  CHECK(out[6] == 0.0f);
  CHECK(out[7] == 0.0f);
}

TEST_CASE("inconsistent inputs are rejected") {
  std::mt19937_64 gen(6);
  auto [views, el] = oracle::random_scene(gen, 2, 10, 4, 4, 2);
  auto bad_index = views;
  bad_index[0].element_index[0] = 10;
  CHECK_THROWS_AS(scatter_aggregate(bad_index, el), Error);
  auto bad_depth = views;
  bad_depth[1].depth.pop_back();
  CHECK_THROWS_AS(scatter_aggregate(bad_depth, el), Error);
  auto bad_channels = views;
  bad_channels[1].features = FeatureMap(4, 4, 3);
  CHECK_THROWS_AS(scatter_aggregate(bad_channels, el), Error);
  auto bad_normals = el;
  bad_normals.normals[0] = {0.0, 0.0, 2.0};
  CHECK_THROWS_AS(scatter_aggregate(views, bad_normals), Error);
}

TEST_CASE("pyramid takes the top-left sample of each block") {
  FeatureMap m(8, 8, 16);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = static_cast<float>(i);
  const auto p = build_pyramid(m);
  CHECK(p[1].height == 4);
  CHECK(p[2].width == 2);
  CHECK(p[2].at(1, 1)[5] == m.at(4, 4)[5]);
  CHECK(p[1].at(3, 0)[0] == m.at(6, 0)[0]);
  CHECK_THROWS_AS(build_pyramid(FeatureMap(6, 8, 1)), Error);
}

TEST_CASE("cross sampling order and border clamping") {
  FeatureMap rgb(3, 3, 3);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) rgb.at(r, c)[0] = static_cast<float>(10 * r + c);
  const auto s = cross_sample_rgb(rgb, 1, 1);
  CHECK(s[0] == 11.0f);
  CHECK(s[3] == 10.0f);
  CHECK(s[6] == 12.0f);
  CHECK(s[9] == 1.0f);
  CHECK(s[12] == 21.0f);
  const auto corner = cross_sample_rgb(rgb, 0, 0);
  CHECK(corner[3] == 0.0f);
  CHECK(corner[9] == 0.0f);
}

TEST_CASE("voxel feature layout is 16+16+16+15+3") {
  FeatureMap m(8, 8, 16);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = static_cast<float>(i);
  FeatureMap rgb(8, 8, 3, 0.25f);
  const auto p = build_pyramid(m);
  const auto f = assemble_voxel_feature(p, rgb, {0.0f, 0.0f, 1.0f}, 5, 6);
  CHECK(f.size() == 66);
  CHECK(f[0] == m.at(6, 5)[0]);
  CHECK(f[16] == p[1].at(3, 2)[0]);
  CHECK(f[32] == p[2].at(1, 1)[0]);
  CHECK(f[48] == 0.25f);
  CHECK(f[65] == 1.0f);
}

TEST_CASE("view order and feature scaling") {
  std::mt19937_64 gen(31);
  auto [views, el] = oracle::random_scene(gen, 4, 100, 16, 16, 3);
  const auto base = scatter_aggregate(views, el);
  auto reversed = views;
  std::reverse(reversed.begin(), reversed.end());
  const auto rev = scatter_aggregate(reversed, el);
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(std::abs(rev[i] - base[i]) <= 1e-6);
  auto scaled = views;
  for (auto& v : scaled)
    for (auto& x : v.features.data) x *= 2.0f;
  const auto twice = scatter_aggregate(scaled, el);
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(twice[i] == 2.0f * base[i]);
  CHECK(score_power(1.0, 3.0) == 1.0);
  CHECK(score_power(0.0, 3.0) == 0.0);
}

TEST_CASE("two equal-weight contributions average") {
  ViewSample v;
  v.features = FeatureMap(1, 2, 1);
  v.features.data = {1.0f, 3.0f};
  v.depth = {0.0f, 0.0f};
  v.element_index = {0, 0};
  v.origin = {0.0, 0.0, 1.0};
  ElementGeometry el;
  el.positions = {{0, 0, 0}};
  el.normals = {{0, 0, 1}};
  const std::vector<ViewSample> views{v};
  CHECK(scatter_aggregate(views, el)[0] == doctest::Approx(4.0 / (2.0 + 1e-6)));
}

}  // TEST_SUITE
