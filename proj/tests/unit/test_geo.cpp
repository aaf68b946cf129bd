#include <doctest.h>

#include <random>

#include "earthvox/error.hpp"
#include "earthvox/geo.hpp"
#include "support/oracles.hpp"

using namespace earthvox;

TEST_SUITE("geo") {

TEST_CASE("ECEF reference points") {
  const Vec3 eq = geodetic_to_ecef({0.0, 0.0, 0.0});
  CHECK(eq.x() == doctest::Approx(6378137.0).epsilon(1e-12));
  CHECK(std::abs(eq.y()) < 1e-6);
  CHECK(std::abs(eq.z()) < 1e-6);
  const Vec3 pole = geodetic_to_ecef({90.0, 0.0, 0.0});
  CHECK(std::abs(pole.z() - 6356752.314) < 1e-3);
  CHECK(std::abs(pole.x()) < 1e-3);
  CHECK_THROWS_AS(geodetic_to_ecef({91.0, 0.0, 0.0}), Error);
}

TEST_CASE("ECEF agrees with the reduced-latitude formulation") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> lat(-90.0, 90.0), lon(-180.0, 180.0), h(-500.0, 9000.0);
  for (int i = 0; i < 500; ++i) {
    const GeodeticCoord g{lat(gen), lon(gen), h(gen)};
    const Vec3 got = geodetic_to_ecef(g);
    const auto want = oracle::geodetic_to_ecef_reduced(g.latitude_deg, g.longitude_deg, g.height_m);
    for (int a = 0; a < 3; ++a) CHECK(std::abs(got[a] - want[static_cast<std::size_t>(a)]) < 1e-3);
  }
}

TEST_CASE("ENU axes and roundtrip") {
  const GeodeticCoord origin{30.0, 120.0, 10.0};
  const Mat3 r = enu_rotation(origin);
  CHECK((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  const Vec3 up = r.row(2).transpose();
  const Vec3 ecef0 = geodetic_to_ecef(origin);
  const Vec3 above = geodetic_to_ecef({30.0, 120.0, 110.0});
  CHECK(((above - ecef0).normalized() - up).norm() < 1e-9);
  CHECK(ecef_to_enu(above, origin).z() == doctest::Approx(100.0));
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-5000.0, 5000.0);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(u(gen), u(gen), u(gen));
    CHECK((ecef_to_enu(enu_to_ecef(p, origin), origin) - p).norm() < 1e-9);
  }
}

TEST_CASE("project and unproject are inverse") {
  const PinholeCamera cam;
  const CameraPose pose = look_at({10.0, -20.0, 50.0}, {0.0, 0.0, 0.0});
  validate(pose);
  const Vec3 world(1.0, 2.0, 3.0);
  const auto uv = project(cam, pose, world);
  REQUIRE(uv.has_value());
  const double depth = -pose.to_camera(world).z();
  const Vec3 back = pose.to_world(unproject(cam, uv->x(), uv->y(), depth));
  CHECK((back - world).norm() < 1e-9);
  CHECK_FALSE(project(cam, pose, Vec3(20.0, -40.0, 100.0)).has_value());
}

TEST_CASE("principal point looks along -Z, +Y up") {
  const PinholeCamera cam;
  const Vec3 p = unproject(cam, cam.cx, cam.cy, 4.0);
  CHECK(p.isApprox(Vec3(0.0, 0.0, -4.0)));
  CHECK(unproject(cam, cam.cx, cam.cy - 10.0, 1.0).y() > 0.0);
  CameraPose identity;
  CHECK(identity.forward().isApprox(Vec3(0.0, 0.0, -1.0)));
}

TEST_CASE("depth lifting lands points in their voxels") {
  PinholeCamera cam{1.0, 1.0, 0.0, 0.0, 2, 1};
  CameraPose pose;
  const std::vector<float> depth{2.0f, 0.0f};
  const auto g = depth_to_condition_voxels(depth, cam, pose, 0.5);
  REQUIRE(g.size() == 1);
  CHECK(g.coords()[0] == Coord3{0, 0, -4});
  CHECK_THROWS_AS(depth_to_condition_voxels(std::vector<float>{1.0f}, cam, pose, 0.5), Error);
}

TEST_CASE("semantic plane lifting and expansion") {
  SemanticMap m{2, 2, {0, 4, 2, 0}};
  const auto plane = lift_semantic_plane(m, 8);
  REQUIRE(plane.size() == 2);
  CHECK(plane.coords()[0] == Coord3{0, 1, 4});
  CHECK(plane.row(0)[0] == 4.0f);
  CHECK(plane.coords()[1] == Coord3{1, 0, 4});
  const auto full = expand_condition_plane(plane);
  CHECK(full.size() == 16);
  CHECK(full.row(15)[0] == 2.0f);
  CHECK_THROWS_AS(lift_semantic_plane(m, 1), Error);
}

TEST_CASE("look_at rejects degenerate input") {
  CHECK_THROWS_AS(look_at({0, 0, 0}, {0, 0, 0}), Error);
  CHECK_THROWS_AS(look_at({0, 0, 10}, {0, 0, 0}), Error);
  const auto pose = look_at({0, -10, 10}, {0, 0, 0});
  CHECK(pose.forward().isApprox(Vec3(0, 10, -10).normalized()));
}

TEST_CASE("top pose: two squares of eight") {
  const Vec3 center(100.0, 200.0, 5.0);
  const auto poses = plan_top_pose(center);
  REQUIRE(poses.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) {
    const auto& p = poses[i];
    validate(p);
    CHECK(p.position.z() == doctest::Approx(505.0));
    const double half = i < 8 ? 300.0 : 50.0;
    const double cheb = std::max(std::abs(p.position.x() - center.x()), std::abs(p.position.y() - center.y()));
    CHECK(cheb == doctest::Approx(half));
  }
  for (std::size_t i = 0; i < 8; ++i) {
    const Vec3 to_center = (center - poses[i].position).normalized();
    CHECK(poses[i].forward().isApprox(to_center, 1e-9));
  }
}

TEST_CASE("adalevel rings span the altitude band") {
  HeightField flat{10, 10, 10.0, -50.0, -50.0, std::vector<float>(100, 0.0f)};
  const auto poses = plan_adalevel(flat, Vec3::Zero());
  REQUIRE(poses.size() == 60);
  CHECK(poses.front().position.z() == doctest::Approx(75.0));
  CHECK(poses.back().position.z() == doctest::Approx(225.0));
  HeightField tall = flat;
  tall.heights[42] = 100.0f;
  CHECK(plan_adalevel(tall, Vec3::Zero()).back().position.z() == doctest::Approx(325.0));
  std::vector<std::uint8_t> blocked(100, 1);
  CHECK(plan_adalevel(flat, Vec3::Zero(), {}, blocked).empty());
  CHECK_THROWS_AS(plan_adalevel(flat, Vec3::Zero(), {}, std::vector<std::uint8_t>(3)), Error);
}

TEST_CASE("spiral descends and widens") {
  const auto poses = plan_building_spiral(Vec3::Zero(), 40.0);
  REQUIRE(poses.size() == 36);
  CHECK(poses.front().position.z() == doctest::Approx(90.0));
  CHECK(poses.back().position.z() == doctest::Approx(75.0));
  CHECK(poses.front().position.head<2>().norm() == doctest::Approx(60.0));
  CHECK(poses.back().position.head<2>().norm() == doctest::Approx(240.0));
  SpiralConfig none;
  none.points = 0;
  CHECK(plan_building_spiral(Vec3::Zero(), 40.0, none).empty());
}

}  // TEST_SUITE
