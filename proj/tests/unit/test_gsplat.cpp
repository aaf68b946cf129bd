#include <doctest.h>

#include <cstring>
#include <random>

#include "earthvox/error.hpp"
#include "earthvox/gsplat.hpp"
#include "support/oracles.hpp"

using namespace earthvox;

namespace {

const std::vector<std::string> kPlyOrder{
    "x", "y", "z", "scale_0", "scale_1", "scale_2", "opacity", "rot_0", "rot_1", "rot_2", "rot_3",
    "f_dc_0", "f_dc_1", "f_dc_2", "f_rest_0", "f_rest_1", "f_rest_2", "f_rest_3", "f_rest_4",
    "f_rest_5", "f_rest_6", "f_rest_7", "f_rest_8"};

std::vector<GaussianPrimitive2D> random_primitives(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<float> nd(0.0f, 3.0f);
  std::vector<GaussianPrimitive2D> out(n);
  for (auto& p : out) {
    for (auto& v : p.position) v = nd(gen);
    for (auto& v : p.scale) v = std::abs(nd(gen)) + 1e-3f;
    p.opacity = 0.37f;
    for (auto& v : p.rotation) v = nd(gen);
    for (auto& v : p.sh) v = nd(gen);
  }
  return out;
}

}  // namespace

TEST_SUITE("gsplat") {

TEST_CASE("activation conventions") {
  const auto coords = SparseVoxelGrid::canonicalize({{2, 0, -1}}, {});
  std::vector<float> raw(kPrimitivesPerVoxel * kRawPrimitiveWidth, 0.0f);
  raw[0] = 100.0f;               // offset x saturates
  raw[3] = 50.0f;                // scale clamps high
  raw[4] = -200.0f;              // scale clamps low
  raw[6] = 1000.0f;              // opacity saturates
  raw[kRawPrimitiveWidth + 6] = -1000.0f;
  raw[kRawPrimitiveWidth + 7] = 2.0f;  // quaternion w
  const auto p = decode_primitives(raw, coords, 0.5);
  REQUIRE(p.size() == kPrimitivesPerVoxel);
  CHECK(p[0].position[0] == doctest::Approx(1.25 + 0.25));
  CHECK(p[0].position[1] == doctest::Approx(0.25));
  CHECK(p[0].position[2] == doctest::Approx(-0.25));
  CHECK(p[0].scale[0] == doctest::Approx(2.0));
  CHECK(p[0].scale[1] == doctest::Approx(1e-6));
  CHECK(p[0].scale[2] == doctest::Approx(1.0));
  CHECK(p[0].opacity < 1.0f);
  CHECK(p[0].opacity > 0.0f);
  CHECK(p[1].opacity > 0.0f);
  CHECK(p[0].rotation == std::array<float, 4>{1.0f, 0.0f, 0.0f, 0.0f});
  CHECK(p[1].rotation == std::array<float, 4>{1.0f, 0.0f, 0.0f, 0.0f});
  CHECK(p[2].opacity == doctest::Approx(0.5));
  CHECK_THROWS_AS(decode_primitives(std::vector<float>(10), coords, 0.5), Error);
}

TEST_CASE("quaternions come out unit length") {
  std::mt19937_64 gen(1);
  std::normal_distribution<float> nd;
  const auto coords = SparseVoxelGrid::canonicalize({{0, 0, 0}, {1, 1, 1}}, {});
  std::vector<float> raw(2 * kPrimitivesPerVoxel * kRawPrimitiveWidth);
  for (auto& v : raw) v = nd(gen);
  for (const auto& p : decode_primitives(raw, coords, 1.0)) {
    double n = 0.0;
    for (float q : p.rotation) n += static_cast<double>(q) * q;
    CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-6));
    for (int a = 0; a < 3; ++a) CHECK(p.scale[static_cast<std::size_t>(a)] > 0.0f);
  }
}

TEST_CASE("PLY header and property order") {
  std::mt19937_64 gen(2);
  const auto prims = random_primitives(gen, 3);
  const std::string text = encode_ply(prims);
  CHECK(text.rfind("ply\nformat ascii 1.0\n", 0) == 0);
  const auto table = oracle::read_ply_reference(text);
  CHECK(table.names == kPlyOrder);
  REQUIRE(table.rows.size() == 3);
  const auto& r = table.rows[1];
  const auto& p = prims[1];
  CHECK(static_cast<float>(r[0]) == p.position[0]);
  CHECK(static_cast<float>(r[6]) == p.opacity);
  CHECK(static_cast<float>(r[7]) == p.rotation[0]);
  CHECK(static_cast<float>(r[11]) == p.sh[0]);
  CHECK(static_cast<float>(r[13]) == p.sh[2]);
  // f_rest_{3k+j} is coefficient j + 1 of color k.
  CHECK(static_cast<float>(r[14]) == p.sh[3]);
  CHECK(static_cast<float>(r[15]) == p.sh[6]);
  CHECK(static_cast<float>(r[17]) == p.sh[4]);
  CHECK(static_cast<float>(r[22]) == p.sh[11]);
}

TEST_CASE("PLY roundtrip is bit exact") {
  std::mt19937_64 gen(3);
  auto prims = random_primitives(gen, 50);
  prims[0].position[0] = 1e-38f;
  prims[1].sh[5] = -0.0f;
  prims[2].scale[1] = 3.4028235e38f;
  const auto back = decode_ply(encode_ply(prims));
  REQUIRE(back.size() == prims.size());
  for (std::size_t i = 0; i < prims.size(); ++i) {
    CHECK(std::memcmp(&back[i], &prims[i], sizeof(GaussianPrimitive2D)) == 0);
  }
  oracle::TempDir dir("ply");
  export_ply(prims, dir / "a.ply");
  CHECK(import_ply(dir / "a.ply") == prims);
}

TEST_CASE("PLY reader rejects foreign layouts") {
  CHECK_THROWS_AS(decode_ply("ply\nformat binary_little_endian 1.0\nend_header\n"), FormatError);
  CHECK_THROWS_AS(decode_ply("not a ply"), FormatError);
  std::mt19937_64 gen(4);
  std::string text = encode_ply(random_primitives(gen, 2));
  CHECK_THROWS_AS(decode_ply(text.substr(0, text.size() - 10)), FormatError);
  const auto pos = text.find("property float y");
  std::string swapped = text;
  swapped.replace(pos, 16, "property float q");
  CHECK_THROWS_AS(decode_ply(swapped), FormatError);
}

}  // TEST_SUITE
