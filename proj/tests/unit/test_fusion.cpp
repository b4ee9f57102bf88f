#include "doctest.h"

#include "oracles/oracles.hpp"
#include "support.hpp"

#include "pointstream/errors.hpp"
#include "pointstream/fusion.hpp"
#include "pointstream/simulator.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <tuple>

using namespace pointstream;

namespace {

std::set<std::tuple<double, double, double>> as_set(const PointCloud& c) {
  std::set<std::tuple<double, double, double>> s;
  for (const auto& p : c.points) s.insert({p.x(), p.y(), p.z()});
  return s;
}

PointCloud random_scene(std::mt19937_64& rng, const SensorModel& cam, std::size_t n) {
  // Clustered depths so many pixels hold several points, plus a few strays.
  const auto& k = cam.intrinsics;
  std::uniform_real_distribution<double> du(-0.5, k.width - 0.5), dv(-0.5, k.height - 0.5);
  std::uniform_real_distribution<double> layer(1.0, 8.0), jitter(0.0, 0.3);
  const double layers[3] = {layer(rng), layer(rng), layer(rng)};
  std::uniform_int_distribution<int> pick(0, 2);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = layers[pick(rng)] + jitter(rng);
    c.points.push_back({(du(rng) - k.cx) / k.fx * z, (dv(rng) - k.cy) / k.fy * z, z});
  }
  for (int i = 0; i < 50; ++i) c.points.push_back(testutil::random_point(rng, -20, 20));
  return c;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("motion_mask examples") {
  FusionParams p;
  p.diff_threshold = 20;
  p.dilation_radius = 1;
  const RgbImage a(40, 30, ColorRgb8{100, 100, 100});

  SUBCASE("identical frames") {
    const MotionMask m = motion_mask(a, a, p);
    CHECK(std::all_of(m.data().begin(), m.data().end(), [](auto x) { return x == 0; }));
  }
  SUBCASE("changed block is dilated by one pixel") {
    RgbImage b = a;
    for (int v = 10; v < 20; ++v)
      for (int u = 5; u < 15; ++u) b(u, v).g = 150;
    const MotionMask m = motion_mask(a, b, p);
    for (int v = 0; v < 30; ++v)
      for (int u = 0; u < 40; ++u) {
        const bool expect = u >= 4 && u <= 15 && v >= 9 && v <= 20;
        REQUIRE(static_cast<bool>(m(u, v)) == expect);
      }
  }
  SUBCASE("threshold 0 with a difference of 1 everywhere") {
    p.diff_threshold = 0;
    p.dilation_radius = 0;
    const RgbImage b(40, 30, ColorRgb8{100, 101, 100});
    const MotionMask m = motion_mask(a, b, p);
    CHECK(std::all_of(m.data().begin(), m.data().end(), [](auto x) { return x == 1; }));
  }
  SUBCASE("difference equal to the threshold is static") {
    const RgbImage b(40, 30, ColorRgb8{120, 80, 100});
    const MotionMask m = motion_mask(a, b, p);
    CHECK(std::all_of(m.data().begin(), m.data().end(), [](auto x) { return x == 0; }));
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(motion_mask(a, RgbImage(40, 31), p), ParameterError);
  }
}

TEST_CASE("motion_mask matches a per-pixel oracle on random frames") {
  std::mt19937_64 rng(2);
  FusionParams p;
  p.diff_threshold = 30;
  p.dilation_radius = 2;
  RgbImage a(37, 23), b(37, 23);
  for (auto& c : a.data()) c = testutil::random_color(rng);
  b = a;
  std::uniform_int_distribution<int> pick(0, 37 * 23 - 1);
  for (int i = 0; i < 15; ++i) b.data()[pick(rng)] = testutil::random_color(rng);
  const MotionMask m = motion_mask(a, b, p);
  for (int v = 0; v < 23; ++v)
    for (int u = 0; u < 37; ++u) {
      bool dyn = false;
      for (int dv = -2; dv <= 2; ++dv)
        for (int du = -2; du <= 2; ++du) {
          const int x = u + du, y = v + dv;
          if (x < 0 || y < 0 || x >= 37 || y >= 23) continue;
          const auto c0 = a(x, y), c1 = b(x, y);
          const int d = std::max({std::abs(c0.r - c1.r), std::abs(c0.g - c1.g), std::abs(c0.b - c1.b)});
          dyn = dyn || d > 30;
        }
      REQUIRE(static_cast<bool>(m(u, v)) == dyn);
    }
}

TEST_CASE("classify_points") {
  const SensorModel cam = testutil::simple_camera(40, 30, 30.0);
  std::mt19937_64 rng(9);
  const PointCloud c = testutil::random_cloud(rng, 3000, -6, 6);

  auto count_visible = [&] {
    std::size_t n = 0;
    for (const auto& p : c.points) n += oracle::project(p, cam).has_value();
    return n;
  };
  SUBCASE("all static") {
    const auto l = classify_points(c, MotionMask(40, 30, 0), cam);
    CHECK(l.static_ids.size() == count_visible());
    CHECK(l.dynamic_ids.empty());
  }
  SUBCASE("all dynamic") {
    const auto l = classify_points(c, MotionMask(40, 30, 1), cam);
    CHECK(l.dynamic_ids.size() == count_visible());
    CHECK(l.static_ids.empty());
  }
  SUBCASE("random mask: labels follow the oracle and partition the scan") {
    for (int trial = 0; trial < 20; ++trial) {
      MotionMask m(40, 30);
      for (auto& x : m.data()) x = rng() & 1;
      const auto l = classify_points(c, m, cam);
      std::vector<int> label(c.size(), -1);
      for (auto id : l.static_ids) { REQUIRE(label[id] == -1); label[id] = 0; }
      for (auto id : l.dynamic_ids) { REQUIRE(label[id] == -1); label[id] = 1; }
      for (auto id : l.unobserved_ids) { REQUIRE(label[id] == -1); label[id] = 2; }
      for (std::size_t i = 0; i < c.size(); ++i) {
        const auto px = oracle::project(c.points[i], cam);
        const int expect = !px ? 2 : (m(px->u, px->v) ? 1 : 0);
        REQUIRE(label[i] == expect);
      }
    }
  }
  SUBCASE("mask size must match") {
    CHECK_THROWS_AS(classify_points(c, MotionMask(41, 30), cam), ParameterError);
  }
}

TEST_CASE("classify_points on a moving box follows the per-point oracle") {
  using namespace pointstream::sim;
  Scene scene;
  scene.seed = 1;
  Primitive wall;
  wall.kind = Primitive::Kind::Plane;
  wall.center = {9, 0, 0};
  wall.u = {0, 8, 0};
  wall.v = {0, 0, 4};
  wall.color = {200, 200, 200};
  scene.primitives.push_back(wall);
  Primitive box;
  box.kind = Primitive::Kind::Box;
  box.min = {5, -0.5, -1};
  box.max = {5.6, 0.5, 1};
  box.color = {200, 30, 30};
  box.motion.kind = Motion::Kind::Linear;
  box.motion.velocity = {0, 3, 0};
  scene.primitives.push_back(box);

  RigConfig rig = RigConfig::standard(160, 90, 90);
  for (auto& l : rig.lidars) l.channels = 32;
  const auto events = run_rig(scene, rig, 0.2);
  REQUIRE(events.size() >= 2);
  FusionParams p;
  const MotionMask m = motion_mask(events[0].frame, events[1].frame, p);
  const auto labels = classify_points(events[1].scan, m, rig.camera);
  CHECK(!labels.dynamic_ids.empty());
  CHECK(!labels.static_ids.empty());
  for (auto id : labels.dynamic_ids) {
    const auto px = oracle::project(events[1].scan.points[id], rig.camera);
    REQUIRE(px);
    REQUIRE(m(px->u, px->v) == 1);
  }
  for (auto id : labels.static_ids) {
    const auto px = oracle::project(events[1].scan.points[id], rig.camera);
    REQUIRE(px);
    REQUIRE(m(px->u, px->v) == 0);
  }
}

TEST_CASE("scan window") {
  ScanWindow w;
  CHECK(w.empty());
  w.push({PointCloud{}, 10, 0});
  w.push({PointCloud{}, 20, 1});
  CHECK_THROWS_AS(w.push({PointCloud{}, 20, 2}), DataError);
  CHECK_THROWS_AS(w.push({PointCloud{}, 30, 1}), DataError);
  w.push({PointCloud{}, 30, 2});
  CHECK(w.size() == 3);
  w.push({PointCloud{}, 40, 0});  // evicts the old sensor 0 entry
  CHECK(w.size() == 3);
  CHECK(w.entries().front().timestamp_ns == 20);
  CHECK(w.entries().back().timestamp_ns == 40);
}

TEST_CASE("fuse_window rules") {
  const SensorModel cam = testutil::simple_camera(40, 30, 30.0);
  const std::map<std::uint8_t, SensorModel> cams = {{0, cam}, {1, cam}, {2, cam}};
  std::mt19937_64 rng(14);
  auto scan = [&](std::uint8_t id) {
    PointCloud c = testutil::random_cloud(rng, 400, -5, 5);
    c.sensor_ids = std::vector<std::uint8_t>(c.size(), id);
    c.timestamps_ns = std::vector<std::int64_t>(c.size(), id * 100);
    return c;
  };

  CHECK_THROWS_AS(fuse_window(ScanWindow{}, {}, cams), ParameterError);

  SUBCASE("single scan with a static mask is returned as is") {
    ScanWindow w;
    const PointCloud s = scan(0);
    w.push({s, 1, 0});
    const std::vector<MotionMask> masks{MotionMask(40, 30, 0)};
    const PointCloud out = fuse_window(w, masks, cams);
    CHECK(out.points == s.points);
    CHECK(out.sensor_ids == s.sensor_ids);
  }
  SUBCASE("all-dynamic masks keep only the newest scan") {
    ScanWindow w;
    w.push({scan(0), 1, 0});
    w.push({scan(1), 2, 1});
    const PointCloud newest = scan(2);
    w.push({newest, 3, 2});
    const std::vector<MotionMask> masks(3, MotionMask(40, 30, 1));
    const PointCloud out = fuse_window(w, masks, cams);
    CHECK(out.points == newest.points);
  }
  SUBCASE("union of static points plus the whole newest scan") {
    ScanWindow w;
    const PointCloud s0 = scan(0), s1 = scan(1), s2 = scan(2);
    w.push({s0, 1, 0});
    w.push({s1, 2, 1});
    w.push({s2, 3, 2});
    std::vector<MotionMask> masks(3, MotionMask(40, 30));
    for (auto& m : masks)
      for (auto& x : m.data()) x = rng() & 1;
    const PointCloud out = fuse_window(w, masks, cams);

    PointCloud expect;
    std::size_t expect_dynamic = 0;
    for (int i = 0; i < 3; ++i) {
      const PointCloud& s = i == 0 ? s0 : (i == 1 ? s1 : s2);
      for (std::size_t j = 0; j < s.size(); ++j) {
        const auto px = oracle::project(s.points[j], cam);
        const bool is_static = px && masks[i](px->u, px->v) == 0;
        if (i == 2 || is_static) expect.points.push_back(s.points[j]);
        if (i == 2 && px && !is_static) ++expect_dynamic;
      }
    }
    CHECK(out.points == expect.points);
    REQUIRE(out.dynamic_flags.has_value());
    CHECK(static_cast<std::size_t>(std::count(out.dynamic_flags->begin(), out.dynamic_flags->end(), 1)) ==
          expect_dynamic);
    REQUIRE(out.sensor_ids.has_value());
    REQUIRE(out.timestamps_ns.has_value());
    for (std::size_t i = 0; i < out.size(); ++i)
      REQUIRE((*out.timestamps_ns)[i] == 100 * (*out.sensor_ids)[i]);
  }
}

TEST_CASE("occlusion_cull examples") {
  const SensorModel cam = testutil::simple_camera(40, 30, 30.0);
  CHECK_THROWS_AS(occlusion_cull(PointCloud{}, cam, 0.0), ParameterError);

  PointCloud one;
  one.points = {{0.1, 0.1, 3}};
  CHECK(occlusion_cull(one, cam, 0.05).size() == 1);

  PointCloud wall;
  const auto& k = cam.intrinsics;
  for (int v = 0; v < k.height; ++v)
    for (int u = 0; u < k.width; ++u)
      wall.points.push_back({(u - k.cx) / k.fx * 2.0, (v - k.cy) / k.fy * 2.0, 2.0});
  wall.points.push_back({0.0, 0.0, 10.0});
  const PointCloud kept = occlusion_cull(wall, cam, 0.05);
  CHECK(kept.size() == wall.size() - 1);
  CHECK(oracle::occlusion_keep(wall, cam, 0.05).back() == false);

  PointCloud close;
  close.points = {{0, 0, 2.00}, {0, 0, 2.03}};
  CHECK(occlusion_cull(close, cam, 0.05).size() == 2);
  CHECK(oracle::occlusion_keep(close, cam, 0.05) == std::vector<bool>{true, true});

  PointCloud outside;
  outside.points = {{0, 0, -1}, {100, 0, 1}};
  CHECK(occlusion_cull(outside, cam, 0.05).empty());
}

TEST_CASE("occlusion_cull matches the per-pixel oracle and is idempotent") {
  std::mt19937_64 rng(77);
  const SensorModel cam = testutil::simple_camera(48, 32, 30.0);
  for (int trial = 0; trial < 100; ++trial) {
    const PointCloud c = random_scene(rng, cam, 2000);
    const double eps = std::uniform_real_distribution<double>(0.01, 0.5)(rng);
    const auto keep = oracle::occlusion_keep(c, cam, eps);
    PointCloud expect;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (keep[i]) expect.points.push_back(c.points[i]);
    const PointCloud once = occlusion_cull(c, cam, eps);
    REQUIRE(once.points == expect.points);
    REQUIRE(occlusion_cull(once, cam, eps).points == once.points);
  }
}

TEST_CASE("fused window is stable on a static scene while raw scans alternate") {
  using namespace pointstream::sim;
  const Scene scene = load_scene(std::filesystem::path(PS_SCENE_DIR) / "static_park.json");
  RigConfig rig = RigConfig::standard(160, 90, 90);
  for (auto& l : rig.lidars) {
    l.channels = 32;
    l.horizontal_step_deg = 360.0 / 512.0;
  }
  const auto events = run_rig(scene, rig, 0.3);
  REQUIRE(events.size() == 9);

  std::map<std::uint8_t, SensorModel> cams;
  for (const auto& l : rig.lidars) cams[l.sensor_id] = rig.camera;
  FusionParams p;
  ScanWindow window;
  std::deque<MotionMask> masks;
  std::vector<PointCloud> fused;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    const MotionMask m = i == 0 ? MotionMask(160, 90, 0) : motion_mask(events[i - 1].frame, ev.frame, p);
    window.push({ev.scan, ev.timestamp_ns, rig.lidars[ev.lidar].sensor_id});
    masks.push_back(m);
    if (masks.size() > window.size()) masks.pop_front();
    if (window.size() == 3) {
      const std::vector<MotionMask> mv(masks.begin(), masks.end());
      fused.push_back(fuse_window(window, mv, cams));
    }
  }
  REQUIRE(fused.size() == 7);
  for (std::size_t i = 1; i < fused.size(); ++i) REQUIRE(as_set(fused[i]) == as_set(fused[0]));

  // Raw single-sensor frames cycle through three distinct point sets.
  const auto s0 = as_set(events[0].scan), s1 = as_set(events[1].scan), s2 = as_set(events[2].scan);
  CHECK(s0 != s1);
  CHECK(s1 != s2);
  CHECK(s0 != s2);
  for (std::size_t i = 3; i < events.size(); ++i)
    REQUIRE(as_set(events[i].scan) == as_set(events[i % 3].scan));
}

}  // TEST_SUITE
