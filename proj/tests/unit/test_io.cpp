#include <doctest.h>

#include <fstream>

#include "earthvox/error.hpp"
#include "earthvox/io.hpp"
#include "support/oracles.hpp"

using namespace earthvox;

TEST_SUITE("io") {

TEST_CASE("flat arrays roundtrip and reject ragged sizes") {
  oracle::TempDir dir("io");
  const std::vector<float> f{1.5f, -2.0f};
  write_f32(f, dir / "a.f32");
  CHECK(read_f32(dir / "a.f32") == f);
  const std::vector<std::int32_t> i{-1, 7};
  write_i32(i, dir / "a.i32");
  CHECK(read_i32(dir / "a.i32") == i);
  std::ofstream(dir / "bad.f32", std::ios::binary) << "abc";
  CHECK_THROWS_AS(read_f32(dir / "bad.f32"), FormatError);
}

TEST_CASE("pose json layout") {
  const auto pose = look_at({1.0, 2.0, 3.0}, {0.0, 0.0, 0.0});
  const auto j = pose_to_json(pose, PinholeCamera{});
  CHECK(j["rotation"].size() == 9);
  CHECK(j["rotation"][1].get<double>() == pose.rotation(0, 1));
  CHECK(j["position"][2].get<double>() == 3.0);
  CHECK(j["width"].get<int>() == 640);
  const auto [back, cam] = pose_from_json(j);
  CHECK(back.rotation == pose.rotation);
  CHECK(back.position == pose.position);
  CHECK(cam.fx == 500.0);
  CHECK_THROWS_AS(pose_from_json(nlohmann::json{{"position", {1, 2}}}), FormatError);
}

TEST_CASE("manifest lines") {
  oracle::TempDir dir("manifest");
  std::ofstream(dir / "m.jsonl") << "{\"id\":\"a\",\"max_height\":12.5,\"source\":\"x\"}\n\n"
                                    "{\"id\":\"b\",\"max_height\":3}\n";
  const auto r = read_manifest(dir / "m.jsonl");
  REQUIRE(r.size() == 2);
  CHECK(r[0].id == "a");
  CHECK(r[0].max_height == 12.5);
  CHECK(r[1].source.empty());
  std::ofstream(dir / "bad.jsonl") << "{\"id\":\"a\"}\n";
  CHECK_THROWS_AS(read_manifest(dir / "bad.jsonl"), FormatError);
}

TEST_CASE("height field header plus raster") {
  oracle::TempDir dir("hf");
  HeightField hf{2, 3, 5.0, -10.0, 4.0, {0, 1, 2, 3, 4, 5}};
  write_height_field(hf, dir / "hf.json");
  const auto a = read_height_field(dir / "hf.json");
  CHECK(a.heights == hf.heights);
  CHECK(a.cell_size == 5.0);
  CHECK(a.origin_x == -10.0);
  const auto b = read_height_field(dir / "hf.f32");
  CHECK(b.rows == 2);
  CHECK(b.cols == 3);
}

TEST_CASE("semantic png roundtrip through the palette") {
  oracle::TempDir dir("png");
  SemanticMap m{3, 4, {0, 1, 2, 3, 4, 5, 6, 7, 8, 25, 24, 0}};
  write_semantic_png(m, dir / "s.png");
  const auto back = read_semantic_png(dir / "s.png");
  CHECK(back.rows == 3);
  CHECK(back.cols == 4);
  CHECK(back.ids == m.ids);
  CHECK_THROWS_AS(read_semantic_png(dir / "missing.png"), FormatError);
}

TEST_CASE("view scene directory roundtrip") {
  oracle::TempDir dir("views");
  std::mt19937_64 gen(1);
  auto [views, el] = oracle::random_scene(gen, 2, 20, 4, 5, 3, true);
  ViewScene scene{views, el, {}, {}};
  write_view_scene(scene, dir.path);
  const auto back = read_view_scene(dir.path);
  REQUIRE(back.views.size() == 2);
  CHECK(back.views[1].features.data == views[1].features.data);
  CHECK(back.views[0].mask == views[0].mask);
  CHECK(back.views[1].origin == views[1].origin);
  CHECK(back.elements.size() == 20);
  CHECK(back.config.z_far == 2.0);
  CHECK_THROWS_AS(read_view_scene(dir / "nope"), Error);
}

}  // TEST_SUITE
