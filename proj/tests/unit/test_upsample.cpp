#include "doctest.h"

#include "oracles/oracles.hpp"
#include "support.hpp"

#include "pointstream/errors.hpp"
#include "pointstream/upsample.hpp"

#include <algorithm>
#include <limits>

using namespace pointstream;

namespace {

DepthImage random_sparse(std::mt19937_64& rng, int w, int h, double density) {
  DepthImage d(w, h, 0.0);
  std::bernoulli_distribution keep(density);
  std::uniform_real_distribution<double> z(0.5, 60.0);
  for (auto& x : d.data())
    if (keep(rng)) x = z(rng);
  return d;
}

RgbImage random_guide(std::mt19937_64& rng, int w, int h) {
  // Piecewise-constant blocks with noise, so both range-weight extremes occur.
  RgbImage g(w, h);
  std::vector<ColorRgb8> palette(6);
  for (auto& c : palette) c = testutil::random_color(rng);
  std::uniform_int_distribution<int> noise(-6, 6);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      ColorRgb8 c = palette[((u / 23) + 2 * (v / 17)) % palette.size()];
      auto jit = [&](std::uint8_t x) { return static_cast<std::uint8_t>(std::clamp(x + noise(rng), 0, 255)); };
      g(u, v) = {jit(c.r), jit(c.g), jit(c.b)};
    }
  return g;
}

double max_abs_diff(const DepthImage& a, const DepthImage& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

bool same_validity(const DepthImage& a, const DepthImage& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if ((a.data()[i] > 0.0) != (b.data()[i] > 0.0)) return false;
  return true;
}

}  // namespace

TEST_SUITE("upsample") {

TEST_CASE("parameter validation") {
  BilateralParams p;
  CHECK_NOTHROW(p.validate());
  p.window_radius = 0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = {};
  p.sigma_range = 0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = {};
  CHECK_THROWS_AS(joint_bilateral_upsample(DepthImage(4, 4), RgbImage(4, 5), p), ParameterError);
}

TEST_CASE("constant depth is reproduced exactly") {
  std::mt19937_64 rng(1);
  BilateralParams p;
  p.window_radius = 4;
  p.sigma_spatial = 2;
  for (double d : {0.7, 3.3, 12.345678, 59.99}) {
    DepthImage sparse(64, 40, 0.0);
    std::bernoulli_distribution keep(0.3);
    for (auto& x : sparse.data())
      if (keep(rng)) x = d;
    const DepthImage out = joint_bilateral_upsample(sparse, random_guide(rng, 64, 40), p);
    for (double x : out.data()) REQUIRE((x == 0.0 || x == d));
  }
}

TEST_CASE("all-invalid input stays invalid") {
  std::mt19937_64 rng(2);
  const DepthImage out = joint_bilateral_upsample(DepthImage(30, 20, 0.0), random_guide(rng, 30, 20), {});
  CHECK(std::all_of(out.data().begin(), out.data().end(), [](double x) { return x == 0.0; }));
}

TEST_CASE("depth step along a guide edge does not bleed") {
  const int w = 60, h = 40;
  RgbImage guide(w, h);
  DepthImage sparse(w, h, 0.0);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const bool left = u < w / 2;
      guide(u, v) = left ? ColorRgb8{0, 0, 0} : ColorRgb8{255, 255, 255};
      if (u % 2 == 0 && v % 2 == 0) sparse(u, v) = left ? 2.0 : 5.0;
    }
  BilateralParams p;
  p.sigma_range = 10.0;
  p.sigma_spatial = 3.0;
  p.window_radius = 6;
  const DepthImage out = joint_bilateral_upsample(sparse, guide, p);
  const DepthImage ref = oracle::bilateral_direct(sparse, guide, p.sigma_spatial, p.sigma_range,
                                                  p.window_radius, p.min_weight);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const double side = u < w / 2 ? 2.0 : 5.0;
      REQUIRE(out(u, v) > 0.0);
      REQUIRE(std::abs(out(u, v) - side) <= 1e-6);
      REQUIRE(std::abs(ref(u, v) - side) <= 1e-6);
    }
}

TEST_CASE("matches direct summation on random sparse frames") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 12; ++trial) {
    BilateralParams p;
    p.sigma_spatial = std::uniform_real_distribution<double>(0.8, 5.0)(rng);
    p.sigma_range = std::uniform_real_distribution<double>(5.0, 60.0)(rng);
    p.window_radius = std::uniform_int_distribution<int>(1, 7)(rng);
    p.min_weight = trial % 3 == 0 ? 0.0 : 1e-4;
    p.threads = 1 + trial % 4;
    const int w = 97, h = 55;
    const DepthImage sparse = random_sparse(rng, w, h, 0.03 + 0.02 * trial);
    const RgbImage guide = random_guide(rng, w, h);
    const DepthImage out = joint_bilateral_upsample(sparse, guide, p);
    const DepthImage ref = oracle::bilateral_direct(sparse, guide, p.sigma_spatial, p.sigma_range,
                                                    p.window_radius, p.min_weight);
    REQUIRE(same_validity(out, ref));
    REQUIRE(max_abs_diff(out, ref) <= 1e-6);
  }
}

TEST_CASE("infinite range sigma equals normalised Gaussian scatter") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 6; ++trial) {
    BilateralParams p;
    p.sigma_range = std::numeric_limits<double>::infinity();
    p.sigma_spatial = 1.0 + trial;
    p.window_radius = 2 + trial;
    const DepthImage sparse = random_sparse(rng, 70, 45, 0.05);
    const DepthImage out = joint_bilateral_upsample(sparse, random_guide(rng, 70, 45), p);
    const DepthImage ref =
        oracle::gaussian_scatter(sparse, p.sigma_spatial, p.window_radius, p.min_weight);
    REQUIRE(same_validity(out, ref));
    REQUIRE(max_abs_diff(out, ref) <= 1e-6);
  }
}

TEST_CASE("output is a convex combination of the window's samples") {
  std::mt19937_64 rng(5);
  BilateralParams p;
  p.window_radius = 3;
  p.sigma_spatial = 2;
  const DepthImage sparse = random_sparse(rng, 80, 50, 0.08);
  const DepthImage out = joint_bilateral_upsample(sparse, random_guide(rng, 80, 50), p);
  for (int v = 0; v < 50; ++v)
    for (int u = 0; u < 80; ++u) {
      if (out(u, v) == 0.0) continue;
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (int dv = -3; dv <= 3; ++dv)
        for (int du = -3; du <= 3; ++du)
          if (sparse.contains(u + du, v + dv) && sparse(u + du, v + dv) > 0.0) {
            lo = std::min(lo, sparse(u + du, v + dv));
            hi = std::max(hi, sparse(u + du, v + dv));
          }
      REQUIRE(out(u, v) >= lo - 1e-12);
      REQUIRE(out(u, v) <= hi + 1e-12);
    }
}

TEST_CASE("adding a valid sample never invalidates a pixel") {
  std::mt19937_64 rng(6);
  BilateralParams p;
  p.window_radius = 3;
  p.sigma_range = 8;
  p.min_weight = 0.05;
  DepthImage sparse = random_sparse(rng, 60, 40, 0.02);
  const RgbImage guide = random_guide(rng, 60, 40);
  DepthImage before = joint_bilateral_upsample(sparse, guide, p);
  std::uniform_int_distribution<int> du(0, 59), dv(0, 39);
  for (int step = 0; step < 40; ++step) {
    sparse(du(rng), dv(rng)) = std::uniform_real_distribution<double>(1, 9)(rng);
    const DepthImage after = joint_bilateral_upsample(sparse, guide, p);
    for (std::size_t i = 0; i < after.size(); ++i)
      if (before.data()[i] > 0.0) REQUIRE(after.data()[i] > 0.0);
    before = after;
  }
}

TEST_CASE("result does not depend on the thread count") {
  std::mt19937_64 rng(7);
  const DepthImage sparse = random_sparse(rng, 120, 70, 0.05);
  const RgbImage guide = random_guide(rng, 120, 70);
  BilateralParams p;
  p.threads = 1;
  const DepthImage ref = joint_bilateral_upsample(sparse, guide, p);
  for (unsigned t : {2u, 3u, 4u, 7u}) {
    p.threads = t;
    REQUIRE(joint_bilateral_upsample(sparse, guide, p) == ref);
  }
}

TEST_CASE("densify_frame") {
  const SensorModel cam = [] {
    SensorModel c;
    c.intrinsics = CameraIntrinsics::from_hfov(160, 90, 60);
    return c;
  }();
  const RgbImage gray(160, 90, ColorRgb8{128, 128, 128});

  SUBCASE("empty cloud") {
    const RgbdFrame f = densify_frame(PointCloud{}, gray, cam, {});
    CHECK(std::all_of(f.depth.data().begin(), f.depth.data().end(), [](double x) { return x == 0.0; }));
    CHECK(f.rgb == gray);
  }
  SUBCASE("plane sampled at every fourth pixel") {
    // Plane z = 4 + 0.05 x in the camera frame.
    const auto& k = cam.intrinsics;
    auto plane_depth = [&](double u, double v) {
      (void)v;
      const double rx = (u - k.cx) / k.fx;
      return 4.0 / (1.0 - 0.05 * rx);
    };
    PointCloud c;
    c.timestamps_ns.emplace();
    for (int v = 0; v < k.height; v += 4)
      for (int u = 0; u < k.width; u += 4) {
        const double z = plane_depth(u, v);
        c.points.push_back({(u - k.cx) / k.fx * z, (v - k.cy) / k.fy * z, z});
        c.timestamps_ns->push_back(1000 + u);
      }
    const RgbdFrame f = densify_frame(c, gray, cam, {});
    CHECK(f.capture_ts_ns == 1000 + 156);
    std::size_t good = 0;
    for (int v = 0; v < k.height; ++v)
      for (int u = 0; u < k.width; ++u)
        if (f.depth(u, v) > 0.0 && std::abs(f.depth(u, v) - plane_depth(u, v)) <= 0.01) ++good;
    CHECK(static_cast<double>(good) >= 0.99 * k.width * k.height);
  }
  SUBCASE("isolated point spreads over the window only") {
    PointCloud c;
    c.points.push_back({0, 0, 5});
    const auto px = project_to_pixel(c.points[0], cam);
    REQUIRE(px);
    BilateralParams p;
    p.window_radius = 3;
    const RgbdFrame f = densify_frame(c, gray, cam, p);
    for (int v = 0; v < 90; ++v)
      for (int u = 0; u < 160; ++u) {
        const bool inside = std::abs(u - px->u) <= 3 && std::abs(v - px->v) <= 3;
        REQUIRE((f.depth(u, v) > 0.0) == inside);
      }
  }
  SUBCASE("guide must match the camera") {
    CHECK_THROWS_AS(densify_frame(PointCloud{}, RgbImage(10, 10), cam, {}), ParameterError);
  }
}

}  // TEST_SUITE
