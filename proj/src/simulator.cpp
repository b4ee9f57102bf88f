#include "pointstream/simulator.hpp"

#include "pointstream/errors.hpp"
#include "pointstream/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace pointstream::sim {

void LidarConfig::validate() const {
  if (channels < 1) throw ParameterError("lidar needs at least one channel");
  if (!(vertical_fov_deg >= 0.0 && vertical_fov_deg < 180.0))
    throw ParameterError("lidar vertical fov must lie in [0, 180)");
  if (!(rotation_hz > 0.0)) throw ParameterError("lidar rotation rate must be > 0");
  if (!(horizontal_step_deg > 0.0 && horizontal_step_deg <= 360.0))
    throw ParameterError("lidar horizontal step must lie in (0, 360]");
  if (!(range_min > 0.0 && range_min < range_max))
    throw ParameterError("lidar range must satisfy 0 < range_min < range_max");
  if (!(panel_transmittance >= 0.0 && panel_transmittance <= 1.0))
    throw ParameterError("panel transmittance must lie in [0, 1]");
  if (!sensor_to_world.is_valid()) throw ParameterError("lidar pose is not a rigid transform");
}

int LidarConfig::columns() const {
  return std::max(1, static_cast<int>(std::floor(360.0 / horizontal_step_deg + 1e-9)));
}

double LidarConfig::channel_elevation_deg(int c) const {
  if (channels == 1) return 0.0;
  return -0.5 * vertical_fov_deg + c * vertical_fov_deg / (channels - 1);
}

double lidar_azimuth_deg(const LidarConfig& cfg, double t) {
  double a = std::fmod(cfg.phase_offset_deg + 360.0 * cfg.rotation_hz * t, 360.0);
  if (a < 0.0) a += 360.0;
  return a;
}

Point3 lidar_ray(double azimuth_deg, double elevation_deg) {
  const double az = deg_to_rad(azimuth_deg), el = deg_to_rad(elevation_deg);
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

double keyed_uniform(std::uint64_t seed, std::uint64_t sensor, std::uint64_t rotation,
                     std::uint64_t ray) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ sensor);
  h = splitmix64(h ^ rotation);
  h = splitmix64(h ^ ray);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

PointCloud lidar_scan(const Scene& scene, const LidarConfig& cfg, double t0, unsigned threads) {
  cfg.validate();
  const int cols = cfg.columns();
  const int chans = cfg.channels;
  const auto rotation = static_cast<std::int64_t>(std::floor(t0 * cfg.rotation_hz + 0.5));
  const double column_dt = cfg.horizontal_step_deg / (360.0 * cfg.rotation_hz);
  const Point3 origin = cfg.sensor_to_world.translation;

  std::vector<double> elevation(chans);
  for (int c = 0; c < chans; ++c) elevation[c] = cfg.channel_elevation_deg(c);

  struct Return {
    Point3 p;
    std::int64_t ts;
  };
  std::vector<std::vector<Return>> per_column(cols);

  parallel_for_chunks(static_cast<std::size_t>(cols), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      const double t = t0 + static_cast<double>(j) * column_dt;
      const double az = cfg.phase_offset_deg + static_cast<double>(j) * cfg.horizontal_step_deg;
      const auto ts = static_cast<std::int64_t>(std::llround(t * 1e9));
      auto& out = per_column[j];
      for (int c = 0; c < chans; ++c) {
        const Point3 dir = cfg.sensor_to_world.rotate(lidar_ray(az, elevation[c]));
        const auto hit = cast_ray(scene, origin, dir, cfg.range_min, cfg.range_max, t);
        if (!hit) continue;
        if (cfg.panel_transmittance < 1.0) {
          const std::uint64_t ray = static_cast<std::uint64_t>(j) * chans + c;
          if (!(keyed_uniform(scene.seed, cfg.sensor_id, static_cast<std::uint64_t>(rotation),
                              ray) < cfg.panel_transmittance))
            continue;
        }
        out.push_back({hit->point, ts});
      }
    }
  });

  PointCloud cloud;
  std::size_t n = 0;
  for (const auto& c : per_column) n += c.size();
  cloud.points.reserve(n);
  auto& ids = cloud.sensor_ids.emplace();
  auto& stamps = cloud.timestamps_ns.emplace();
  ids.reserve(n);
  stamps.reserve(n);
  for (const auto& col : per_column)
    for (const auto& r : col) {
      cloud.points.push_back(r.p);
      ids.push_back(cfg.sensor_id);
      stamps.push_back(r.ts);
    }
  return cloud;
}

RgbImage camera_frame(const Scene& scene, const SensorModel& cam, double t, unsigned threads) {
  const auto& k = cam.intrinsics;
  RgbImage img(k.width, k.height, ColorRgb8{0, 0, 0});
  const Pose cam_to_world = cam.world_to_camera.inverse();
  const Point3 origin = cam_to_world.translation;
  parallel_for_chunks(static_cast<std::size_t>(k.height), threads,
                      [&](std::size_t b, std::size_t e) {
    for (std::size_t v = b; v < e; ++v)
      for (int u = 0; u < k.width; ++u) {
        const Point3 d_cam((u - k.cx) / k.fx, (static_cast<double>(v) - k.cy) / k.fy, 1.0);
        const Point3 dir = cam_to_world.rotate(d_cam.normalized());
        const auto hit =
            cast_ray(scene, origin, dir, kZNear, std::numeric_limits<double>::infinity(), t);
        if (hit) img(u, static_cast<int>(v)) = hit->color;
      }
  });
  return img;
}

void RigConfig::validate() const {
  for (const auto& l : lidars) l.validate();
  for (std::size_t i = 0; i < lidars.size(); ++i)
    for (std::size_t j = i + 1; j < lidars.size(); ++j) {
      if (std::abs(std::remainder(lidars[i].phase_offset_deg - lidars[j].phase_offset_deg, 360.0)) <
          1e-9)
        throw ParameterError("rig LiDARs need distinct phase offsets");
      if (lidars[i].sensor_id == lidars[j].sensor_id)
        throw ParameterError("rig LiDARs need distinct sensor ids");
    }
  camera.validate();
  if (!(camera_fps > 0.0)) throw ParameterError("camera fps must be > 0");
}

RigConfig RigConfig::standard(int width, int height, double hfov_deg) {
  RigConfig rig;
  const Point3 mounts[3] = {{0.0, 0.12, 0.05}, {0.0, -0.12, 0.05}, {0.0, 0.0, 0.20}};
  for (int i = 0; i < 3; ++i) {
    auto& l = rig.lidars[i];
    l.phase_offset_deg = 120.0 * i;
    l.sensor_id = static_cast<std::uint8_t>(i);
    l.sensor_to_world = Pose::from(Matrix3::Identity(), mounts[i]);
  }
  rig.camera.intrinsics = CameraIntrinsics::from_hfov(width, height, hfov_deg);
  // Camera looks along world +x with image x to world -y and image y to world -z.
  Matrix3 r;
  r << 0, -1, 0,
       0, 0, -1,
       1, 0, 0;
  const Point3 center(0.05, 0.0, 0.0);
  rig.camera.world_to_camera = Pose::from(r, -(r * center));
  return rig;
}

std::vector<Trigger> rig_triggers(const RigConfig& rig, double duration) {
  if (!(duration > 0.0)) throw ParameterError("rig duration must be > 0");
  std::vector<Trigger> out;
  for (std::size_t k = 0; k < rig.lidars.size(); ++k) {
    const auto& l = rig.lidars[k];
    double lag = std::fmod(rig.camera_azimuth_deg - l.phase_offset_deg, 360.0);
    if (lag < 0.0) lag += 360.0;
    const double first = lag / (360.0 * l.rotation_hz);
    for (std::int64_t n = 0;; ++n) {
      const double t = first + static_cast<double>(n) / l.rotation_hz;
      if (t >= duration) break;
      out.push_back({t, k, n});
    }
  }
  std::sort(out.begin(), out.end(), [](const Trigger& a, const Trigger& b) {
    return a.time_s < b.time_s || (a.time_s == b.time_s && a.lidar < b.lidar);
  });
  return out;
}

RigEvent render_event(const Scene& scene, const RigConfig& rig, const Trigger& trig,
                      std::size_t index, unsigned threads) {
  const auto& l = rig.lidars[trig.lidar];
  RigEvent ev;
  ev.index = index;
  ev.time_s = trig.time_s;
  ev.timestamp_ns = std::llround(trig.time_s * 1e9);
  ev.lidar = trig.lidar;
  ev.rotation = trig.rotation;
  ev.scan = lidar_scan(scene, l, static_cast<double>(trig.rotation) / l.rotation_hz, threads);
  ev.frame = camera_frame(scene, rig.camera, trig.time_s, threads);
  return ev;
}

std::vector<RigEvent> run_rig(const Scene& scene, const RigConfig& rig, double duration,
                              unsigned threads) {
  rig.validate();
  const auto triggers = rig_triggers(rig, duration);
  std::vector<RigEvent> out;
  out.reserve(triggers.size());
  for (std::size_t i = 0; i < triggers.size(); ++i)
    out.push_back(render_event(scene, rig, triggers[i], i, threads));
  return out;
}

Scene checkerboard_scene(std::uint64_t seed) {
  Scene s;
  s.seed = seed;
  Primitive board;
  board.kind = Primitive::Kind::Plane;
  board.name = "checkerboard";
  board.center = Point3(1.5, 0.0, 0.0);
  board.u = Point3(0.0, 0.8, 0.0);
  board.v = Point3(0.0, 0.0, 0.6);
  board.color = {240, 240, 240};
  board.checker = Checker{0.12, ColorRgb8{20, 20, 20}};
  s.primitives.push_back(board);
  return s;
}

LidarConfig checkerboard_lidar() {
  LidarConfig l;
  l.sensor_id = 0;
  return l;
}

double binomial_half_width95(double p, double n) {
  return 1.959963984540054 * std::sqrt(p * (1.0 - p) / n);
}

CheckerboardResult checkerboard_experiment(double transmittance, int trials, std::uint64_t seed,
                                           unsigned threads) {
  if (trials < 1) throw ParameterError("checkerboard experiment needs at least one trial");
  if (!(transmittance >= 0.0 && transmittance <= 1.0))
    throw ParameterError("transmittance must lie in [0, 1]");
  LidarConfig lidar = checkerboard_lidar();
  CheckerboardResult res;
  res.baseline_points = lidar_scan(checkerboard_scene(seed), lidar, 0.0, threads).size();
  lidar.panel_transmittance = transmittance;
  double sum = 0.0;
  for (int i = 0; i < trials; ++i) {
    const auto n = lidar_scan(checkerboard_scene(seed + static_cast<std::uint64_t>(i) + 1), lidar,
                              0.0, threads)
                       .size();
    res.per_trial_points.push_back(n);
    sum += static_cast<double>(n);
  }
  res.mean_points = sum / trials;
  if (res.baseline_points > 0) {
    res.mean_loss = 1.0 - res.mean_points / static_cast<double>(res.baseline_points);
    const double hw = binomial_half_width95(
        res.mean_loss, static_cast<double>(trials) * static_cast<double>(res.baseline_points));
    res.ci_low = res.mean_loss - hw;
    res.ci_high = res.mean_loss + hw;
  }
  return res;
}

PointCloud sample_surfaces(const Scene& scene, double spacing, double t) {
  if (!(spacing > 0.0)) throw ParameterError("surface sampling spacing must be > 0");
  PointCloud cloud;
  auto& colors = cloud.colors.emplace();
  auto emit_rect = [&](const Primitive& p, const Point3& c, const Point3& u, const Point3& v) {
    // Grid over the rectangle c +- u +- v, cell centres.
    const int nu = std::max(1, static_cast<int>(std::floor(2.0 * u.norm() / spacing)));
    const int nv = std::max(1, static_cast<int>(std::floor(2.0 * v.norm() / spacing)));
    const Point3 off = p.motion.offset(t);
    for (int j = 0; j < nv; ++j)
      for (int i = 0; i < nu; ++i) {
        const double a = -1.0 + (2.0 * i + 1.0) / nu;
        const double b = -1.0 + (2.0 * j + 1.0) / nv;
        const Point3 q = c + a * u + b * v;
        cloud.points.push_back(q + off);
        ColorRgb8 col = p.color;
        if (p.checker) {
          const Point3 rel = q - (p.center - p.u - p.v);
          const auto ci = static_cast<long long>(std::floor(rel.dot(p.u.normalized()) / p.checker->square));
          const auto cj = static_cast<long long>(std::floor(rel.dot(p.v.normalized()) / p.checker->square));
          if ((ci + cj) & 1) col = p.checker->color;
        }
        colors.push_back(col);
      }
  };
  for (const auto& p : scene.primitives) {
    switch (p.kind) {
      case Primitive::Kind::Plane: emit_rect(p, p.center, p.u, p.v); break;
      case Primitive::Kind::Box: {
        const Point3 c = 0.5 * (p.min + p.max);
        const Point3 h = 0.5 * (p.max - p.min);
        for (int a = 0; a < 3; ++a) {
          const int b = (a + 1) % 3, d = (a + 2) % 3;
          Point3 u = Point3::Zero(), v = Point3::Zero(), n = Point3::Zero();
          u[b] = h[b];
          v[d] = h[d];
          n[a] = h[a];
          emit_rect(p, c + n, u, v);
          emit_rect(p, c - n, u, v);
        }
        break;
      }
      case Primitive::Kind::Sphere: {
        // Latitude rings at roughly `spacing` arc length.
        const int rings = std::max(2, static_cast<int>(std::ceil(3.14159265358979 * p.radius / spacing)));
        const Point3 off = p.motion.offset(t);
        for (int r = 0; r < rings; ++r) {
          const double theta = 3.14159265358979323846 * (r + 0.5) / rings;
          const int segs = std::max(3, static_cast<int>(std::ceil(2.0 * 3.14159265358979 * p.radius *
                                                                  std::sin(theta) / spacing)));
          for (int s = 0; s < segs; ++s) {
            const double phi = 2.0 * 3.14159265358979323846 * s / segs;
            cloud.points.push_back(p.center + off +
                                   p.radius * Point3(std::sin(theta) * std::cos(phi),
                                                     std::sin(theta) * std::sin(phi), std::cos(theta)));
            colors.push_back(p.color);
          }
        }
        break;
      }
    }
  }
  return cloud;
}

}  // namespace pointstream::sim
