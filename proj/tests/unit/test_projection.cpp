#include "doctest.h"

#include "oracles/oracles.hpp"
#include "support.hpp"

#include "pointstream/camera.hpp"
#include "pointstream/errors.hpp"

#include <algorithm>

using namespace pointstream;

namespace {

SensorModel posed_camera(std::mt19937_64& rng, int w, int h) {
  SensorModel cam;
  cam.intrinsics = CameraIntrinsics::from_hfov(w, h, 70.0);
  cam.world_to_camera =
      Pose::from(testutil::random_rotation(rng), testutil::random_point(rng, -1, 1));
  return cam;
}

/// Random points in front of `cam` (camera-frame depth in [zmin, zmax]).
PointCloud points_in_view(std::mt19937_64& rng, const SensorModel& cam, std::size_t n,
                          double zmin, double zmax) {
  const Pose to_world = cam.world_to_camera.inverse();
  const auto& k = cam.intrinsics;
  std::uniform_real_distribution<double> du(-0.5, k.width - 0.5), dv(-0.5, k.height - 0.5),
      dz(zmin, zmax);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = dz(rng);
    const Point3 p((du(rng) - k.cx) / k.fx * z, (dv(rng) - k.cy) / k.fy * z, z);
    c.points.push_back(to_world.apply(p));
  }
  return c;
}

bool depth_images_match(const DepthImage& a, const DepthImage& b, double tol) {
  if (!a.same_size(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a.data()[i] - b.data()[i]) > tol) return false;
  return true;
}

}  // namespace

TEST_SUITE("projection") {

TEST_CASE("project_point examples") {
  SensorModel cam = testutil::simple_camera(640, 480, 100.0);
  cam.intrinsics.cx = 320;
  cam.intrinsics.cy = 240;

  const auto axis = project_point({0, 0, 5}, cam);
  REQUIRE(axis);
  CHECK(axis->u == 320.0);
  CHECK(axis->v == 240.0);
  CHECK(axis->z == 5.0);

  const auto p = project_point({1, 0, 1}, cam);
  REQUIRE(p);
  CHECK(p->u == 420.0);

  CHECK_FALSE(project_point({0, 0, -1}, cam).has_value());
  CHECK_FALSE(project_point({0, 0, kZNear}, cam).has_value());
  CHECK_FALSE(project_to_pixel({1000, 0, 1}, cam).has_value());
}

TEST_CASE("intrinsics validation") {
  CameraIntrinsics k = CameraIntrinsics::from_hfov(64, 48, 90);
  CHECK_NOTHROW(k.validate());
  k.fx = 0;
  CHECK_THROWS_AS(k.validate(), ParameterError);
  k = CameraIntrinsics::from_hfov(64, 48, 90);
  k.cx = 64;
  CHECK_THROWS_AS(k.validate(), ParameterError);
}

TEST_CASE("render_zbuffer examples") {
  const SensorModel cam = testutil::simple_camera(32, 24, 20.0);
  const DepthImage empty = render_zbuffer(PointCloud{}, cam);
  CHECK(std::all_of(empty.data().begin(), empty.data().end(), [](double d) { return d == 0.0; }));

  PointCloud two;
  two.points = {{0, 0, 5}, {0, 0, 2}};
  const auto px = project_to_pixel({0, 0, 2}, cam);
  REQUIRE(px);
  CHECK(render_zbuffer(two, cam)(px->u, px->v) == 2.0);
}

TEST_CASE("render_zbuffer matches the per-pixel oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const SensorModel cam = posed_camera(rng, 80, 60);
    PointCloud c = points_in_view(rng, cam, 10000, 0.5, 20);
    // Some points behind the camera and off to the side as well.
    PointCloud stray = testutil::random_cloud(rng, 500, -30, 30);
    c.append(stray);
    CHECK(depth_images_match(render_zbuffer(c, cam), oracle::zbuffer(c, cam), 1e-12));
  }
}

TEST_CASE("render_zbuffer is invariant to point order") {
  std::mt19937_64 rng(22);
  const SensorModel cam = posed_camera(rng, 64, 48);
  PointCloud c = points_in_view(rng, cam, 5000, 1, 4);
  const DepthImage ref = render_zbuffer(c, cam);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(c.points.begin(), c.points.end(), rng);
    REQUIRE(render_zbuffer(c, cam) == ref);
  }
}

TEST_CASE("colorize") {
  const SensorModel cam = testutil::simple_camera(40, 30, 25.0);
  std::mt19937_64 rng(4);
  PointCloud c = points_in_view(rng, cam, 300, 1, 10);
  c.points.push_back({0, 0, -3});  // behind
  c.points.push_back({50, 0, 1});  // outside

  SUBCASE("uniform red") {
    const RgbImage red(40, 30, ColorRgb8{255, 0, 0});
    const auto res = colorize(c, red, cam);
    for (std::size_t i = 0; i < 300; ++i) {
      REQUIRE(res.colored[i] == 1);
      REQUIRE((*res.cloud.colors)[i] == ColorRgb8{255, 0, 0});
    }
    CHECK(res.colored[300] == 0);
    CHECK(res.colored[301] == 0);
    CHECK(keep_colored(res).size() == 300);
  }
  SUBCASE("half green, half blue") {
    RgbImage img(40, 30);
    for (int v = 0; v < 30; ++v)
      for (int u = 0; u < 40; ++u) img(u, v) = u < 20 ? ColorRgb8{0, 255, 0} : ColorRgb8{0, 0, 255};
    const auto res = colorize(c, img, cam);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto px = oracle::project(c.points[i], cam);
      REQUIRE(res.colored[i] == (px ? 1 : 0));
      if (px) REQUIRE((*res.cloud.colors)[i] == img(px->u, px->v));
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(colorize(c, RgbImage(41, 30), cam), ParameterError);
  }
}

TEST_CASE("colorize never colours a point behind the camera") {
  std::mt19937_64 rng(6);
  const SensorModel cam = posed_camera(rng, 50, 40);
  const PointCloud c = testutil::random_cloud(rng, 5000, -10, 10);
  const auto res = colorize(c, RgbImage(50, 40, ColorRgb8{1, 2, 3}), cam);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Point3 pc = cam.world_to_camera.apply(c.points[i]);
    if (pc.z() <= kZNear) REQUIRE(res.colored[i] == 0);
  }
}

TEST_CASE("backproject") {
  SensorModel cam = testutil::simple_camera(31, 21, 30.0);

  SUBCASE("all invalid") {
    CHECK(backproject(DepthImage(31, 21, 0.0), nullptr, cam).empty());
  }
  SUBCASE("principal point") {
    DepthImage d(31, 21, 0.0);
    d(15, 10) = 3.0;
    const PointCloud c = backproject(d, nullptr, cam);
    REQUIRE(c.size() == 1);
    CHECK(c.points[0] == Point3(0, 0, 3));
  }
  SUBCASE("colours are copied") {
    DepthImage d(31, 21, 0.0);
    d(4, 5) = 2.0;
    RgbImage rgb(31, 21);
    rgb(4, 5) = {7, 8, 9};
    const PointCloud c = backproject(d, &rgb, cam);
    REQUIRE(c.has_colors());
    CHECK((*c.colors)[0] == ColorRgb8{7, 8, 9});
  }
  SUBCASE("dimension mismatch") {
    RgbImage rgb(30, 21);
    CHECK_THROWS_AS(backproject(DepthImage(31, 21), &rgb, cam), ParameterError);
  }
  SUBCASE("one point per pixel survives zbuffer then backproject") {
    std::mt19937_64 rng(13);
    cam.world_to_camera =
        Pose::from(testutil::random_rotation(rng), testutil::random_point(rng, -2, 2));
    const Pose to_world = cam.world_to_camera.inverse();
    const auto& k = cam.intrinsics;
    std::uniform_real_distribution<double> dz(0.5, 30);
    PointCloud c;
    for (int v = 0; v < k.height; ++v)
      for (int u = 0; u < k.width; ++u) {
        const double z = dz(rng);
        c.points.push_back(to_world.apply(Point3((u - k.cx) / k.fx * z, (v - k.cy) / k.fy * z, z)));
      }
    const PointCloud back = backproject(render_zbuffer(c, cam), nullptr, cam);
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
      REQUIRE((back.points[i] - c.points[i]).norm() < 1e-6);
  }
}

TEST_CASE("project and backproject round trip per pixel") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const SensorModel cam = posed_camera(rng, 64, 48);
    std::uniform_int_distribution<int> du(0, 63), dv(0, 47);
    std::uniform_real_distribution<double> dz(1e-3, 150);
    for (int n = 0; n < 200; ++n) {
      DepthImage d(64, 48, 0.0);
      const int u = du(rng), v = dv(rng);
      const double z = dz(rng);
      d(u, v) = z;
      const Point3 p = backproject(d, nullptr, cam).points.at(0);
      const auto proj = project_point(p, cam);
      REQUIRE(proj);
      REQUIRE(std::abs(proj->u - u) < 1e-9);
      REQUIRE(std::abs(proj->v - v) < 1e-9);
      REQUIRE(std::abs(proj->z - z) < 1e-9);
    }
  }
}

}  // TEST_SUITE
