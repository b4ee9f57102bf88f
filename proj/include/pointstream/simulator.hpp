#pragma once

#include "pointstream/camera.hpp"
#include "pointstream/scene.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace pointstream::sim {

struct LidarConfig {
  int channels = 128;
  double vertical_fov_deg = 45.0;  ///< channels spread uniformly over +-fov/2
  double rotation_hz = 10.0;
  double horizontal_step_deg = 360.0 / 1024.0;
  double range_min = 1.0, range_max = 200.0;
  double phase_offset_deg = 0.0;
  Pose sensor_to_world;
  double panel_transmittance = 1.0;
  std::uint8_t sensor_id = 0;

  void validate() const;
  int columns() const;
  double channel_elevation_deg(int channel) const;
};

/// Instantaneous scan azimuth at time t (rotation started at t = 0 with
/// azimuth = phase offset), in [0, 360).
double lidar_azimuth_deg(const LidarConfig& cfg, double t);

/// Unit ray direction in the sensor frame (+x forward, +z up).
Point3 lidar_ray(double azimuth_deg, double elevation_deg);

/// Counter-based uniform in [0,1) keyed by the four integers.
double keyed_uniform(std::uint64_t seed, std::uint64_t sensor, std::uint64_t rotation,
                     std::uint64_t ray);

/// One full rotation starting at time t0 with azimuth = phase offset. Points
/// are in the world frame, in firing order (column-major, channel fastest),
/// stamped with their firing time and sensor id. Each return survives the
/// protective panel with probability panel_transmittance.
PointCloud lidar_scan(const Scene& scene, const LidarConfig& cfg, double t0,
                      unsigned threads = 0);

/// Flat-shaded pinhole render at time t; black where no primitive is hit.
RgbImage camera_frame(const Scene& scene, const SensorModel& cam, double t, unsigned threads = 0);

struct RigConfig {
  std::array<LidarConfig, 3> lidars;
  SensorModel camera;
  /// Azimuth of the camera's optical axis in the LiDAR frame.
  double camera_azimuth_deg = 0.0;
  double camera_fps = 30.0;

  void validate() const;

  /// Three LiDARs at 0/120/240 degree phase on a small triangle, camera
  /// looking along +x. Resolution defaults to Full HD.
  static RigConfig standard(int width = 1920, int height = 1080, double hfov_deg = 90.0);
};

struct RigEvent {
  std::size_t index = 0;
  double time_s = 0.0;        ///< camera trigger time
  std::int64_t timestamp_ns = 0;
  std::size_t lidar = 0;      ///< index into RigConfig::lidars
  std::int64_t rotation = 0;  ///< rotation index of that LiDAR
  PointCloud scan;
  RgbImage frame;
};

/// Trigger times in [0, duration): every instant a LiDAR azimuth crosses the
/// camera axis, sorted. Cheap; does not render.
struct Trigger {
  double time_s;
  std::size_t lidar;
  std::int64_t rotation;
};
std::vector<Trigger> rig_triggers(const RigConfig& rig, double duration);

/// Renders the scan/frame pair for one trigger.
RigEvent render_event(const Scene& scene, const RigConfig& rig, const Trigger& trig,
                      std::size_t index, unsigned threads = 0);

std::vector<RigEvent> run_rig(const Scene& scene, const RigConfig& rig, double duration,
                              unsigned threads = 0);

// ---------------------------------------------------------------------------
// Housing loss harness

struct CheckerboardResult {
  std::size_t baseline_points = 0;  ///< returns with transmittance 1
  double mean_points = 0.0;
  double mean_loss = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  ///< 95% binomial interval around mean_loss
  std::vector<std::size_t> per_trial_points;
};

/// 1.6 x 1.2 m board of 12 cm squares, 1.5 m in front of a single LiDAR.
Scene checkerboard_scene(std::uint64_t seed = 0);
LidarConfig checkerboard_lidar();

CheckerboardResult checkerboard_experiment(double transmittance, int trials, std::uint64_t seed,
                                           unsigned threads = 0);

/// Normal-approximation 95% half-width for a proportion over n draws.
double binomial_half_width95(double p, double n);

// ---------------------------------------------------------------------------
// Surface sampling (stand-in for a pre-captured static cloud)

/// Colored points on every primitive surface, on a grid of the given spacing,
/// primitives placed at time t.
PointCloud sample_surfaces(const Scene& scene, double spacing, double t = 0.0);

}  // namespace pointstream::sim
