#pragma once

#include "pointstream/camera.hpp"
#include "pointstream/point_cloud.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testutil {

using namespace pointstream;

inline Point3 random_point(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return {d(rng), d(rng), d(rng)};
}

inline ColorRgb8 random_color(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, 255);
  return {static_cast<std::uint8_t>(d(rng)), static_cast<std::uint8_t>(d(rng)),
          static_cast<std::uint8_t>(d(rng))};
}

inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double lo, double hi,
                               bool colored = false) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.push_back(random_point(rng, lo, hi));
  if (colored) {
    auto& cols = c.colors.emplace();
    for (std::size_t i = 0; i < n; ++i) cols.push_back(random_color(rng));
  }
  return c;
}

/// Identity-pose camera looking down +z.
inline SensorModel simple_camera(int w, int h, double f) {
  SensorModel cam;
  cam.intrinsics.fx = cam.intrinsics.fy = f;
  cam.intrinsics.cx = (w - 1) / 2.0;
  cam.intrinsics.cy = (h - 1) / 2.0;
  cam.intrinsics.width = w;
  cam.intrinsics.height = h;
  return cam;
}

/// Random proper rotation.
inline Matrix3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::random_device rd;
  auto p = std::filesystem::temp_directory_path() /
           ("pointstream_" + tag + "_" + std::to_string(rd()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
