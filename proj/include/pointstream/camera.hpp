#pragma once

#include "pointstream/image.hpp"
#include "pointstream/point_cloud.hpp"

#include <optional>
#include <vector>

namespace pointstream {

/// Depths at or below this are treated as behind the camera.
inline constexpr double kZNear = 1e-6;

struct CameraIntrinsics {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  int width = 1, height = 1;

  void validate() const;

  /// Square-pixel camera with the given horizontal field of view, principal
  /// point at the image centre.
  static CameraIntrinsics from_hfov(int width, int height, double hfov_deg);

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// Pinhole camera. `pose` maps world points into the camera frame.
struct SensorModel {
  CameraIntrinsics intrinsics;
  Pose world_to_camera;

  void validate() const;
};

struct PixelProjection {
  double u, v;  ///< pixel coordinates; integer values are pixel centres
  double z;     ///< depth along the optical axis, meters
};

/// Pinhole projection, or nullopt when the point is at or behind z_near.
std::optional<PixelProjection> project_point(const Point3& p_world, const SensorModel& cam);

struct PixelIndex {
  int u, v;
  double z;
};

/// Nearest pixel of a projected point, or nullopt when it is behind the camera
/// or outside the image.
std::optional<PixelIndex> project_to_pixel(const Point3& p_world, const SensorModel& cam);

/// Per-pixel minimum depth over points landing on that pixel; 0 where empty.
DepthImage render_zbuffer(const PointCloud& cloud, const SensorModel& cam);

struct ColorizeResult {
  PointCloud cloud;               ///< input with colors filled in
  std::vector<std::uint8_t> colored;  ///< 1 where a pixel color was sampled
};

/// Nearest-pixel color sampling. Points behind the camera or outside the image
/// get color (0,0,0) and colored = 0.
ColorizeResult colorize(const PointCloud& cloud, const RgbImage& rgb, const SensorModel& cam);

/// Keeps only points with colored = 1.
PointCloud keep_colored(const ColorizeResult& result);

/// One world point per valid depth pixel, in raster order, with colors from
/// `rgb` when given.
PointCloud backproject(const DepthImage& depth, const RgbImage* rgb, const SensorModel& cam);

}  // namespace pointstream
