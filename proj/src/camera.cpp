#include "pointstream/camera.hpp"

#include <cmath>
#include <limits>

namespace pointstream {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
    throw ParameterError("camera focal lengths must be positive");
  if (width <= 0 || height <= 0) throw ParameterError("camera image size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
    throw ParameterError("principal point must lie inside the image");
}

CameraIntrinsics CameraIntrinsics::from_hfov(int width, int height, double hfov_deg) {
  CameraIntrinsics k;
  k.width = width;
  k.height = height;
  k.fx = k.fy = 0.5 * width / std::tan(0.5 * deg_to_rad(hfov_deg));
  k.cx = 0.5 * (width - 1);
  k.cy = 0.5 * (height - 1);
  return k;
}

void SensorModel::validate() const {
  intrinsics.validate();
  if (!world_to_camera.is_valid()) throw ParameterError("camera pose is not a rigid transform");
}

std::optional<PixelProjection> project_point(const Point3& p_world, const SensorModel& cam) {
  const Point3 p = cam.world_to_camera.apply(p_world);
  if (!(p.z() > kZNear)) return std::nullopt;
  const auto& k = cam.intrinsics;
  return PixelProjection{k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy, p.z()};
}

std::optional<PixelIndex> project_to_pixel(const Point3& p_world, const SensorModel& cam) {
  const auto proj = project_point(p_world, cam);
  if (!proj) return std::nullopt;
  const double fu = std::floor(proj->u + 0.5);
  const double fv = std::floor(proj->v + 0.5);
  if (!(fu >= 0.0 && fv >= 0.0 && fu < cam.intrinsics.width && fv < cam.intrinsics.height))
    return std::nullopt;
  return PixelIndex{static_cast<int>(fu), static_cast<int>(fv), proj->z};
}

DepthImage render_zbuffer(const PointCloud& cloud, const SensorModel& cam) {
  const auto& k = cam.intrinsics;
  DepthImage depth(k.width, k.height, 0.0);
  for (const auto& p : cloud.points) {
    const auto px = project_to_pixel(p, cam);
    if (!px) continue;
    double& d = depth(px->u, px->v);
    if (d == 0.0 || px->z < d) d = px->z;
  }
  return depth;
}

ColorizeResult colorize(const PointCloud& cloud, const RgbImage& rgb, const SensorModel& cam) {
  if (!rgb.same_size(cam.intrinsics.width, cam.intrinsics.height))
    throw ParameterError("colorize: image size does not match camera intrinsics");
  ColorizeResult out{cloud, std::vector<std::uint8_t>(cloud.size(), 0)};
  auto& colors = out.cloud.colors.emplace(cloud.size(), ColorRgb8{});
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto px = project_to_pixel(cloud.points[i], cam);
    if (!px) continue;
    colors[i] = rgb(px->u, px->v);
    out.colored[i] = 1;
  }
  return out;
}

PointCloud keep_colored(const ColorizeResult& result) {
  std::vector<PointId> ids;
  for (std::size_t i = 0; i < result.colored.size(); ++i)
    if (result.colored[i]) ids.push_back(static_cast<PointId>(i));
  return select(result.cloud, ids);
}

PointCloud backproject(const DepthImage& depth, const RgbImage* rgb, const SensorModel& cam) {
  const auto& k = cam.intrinsics;
  if (!depth.same_size(k.width, k.height))
    throw ParameterError("backproject: depth size does not match camera intrinsics");
  if (rgb && !rgb->same_size(k.width, k.height))
    throw ParameterError("backproject: rgb size does not match camera intrinsics");
  const Pose cam_to_world = cam.world_to_camera.inverse();
  PointCloud out;
  if (rgb) out.colors.emplace();
  for (int v = 0; v < k.height; ++v)
    for (int u = 0; u < k.width; ++u) {
      const double z = depth(u, v);
      if (!(z > 0.0)) continue;
      const Point3 pc(z * (u - k.cx) / k.fx, z * (v - k.cy) / k.fy, z);
      out.points.push_back(cam_to_world.apply(pc));
      if (rgb) out.colors->push_back((*rgb)(u, v));
    }
  return out;
}

}  // namespace pointstream
