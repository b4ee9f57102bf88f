#pragma once

#include "pointstream/codec.hpp"
#include "pointstream/color_transfer.hpp"
#include "pointstream/fusion.hpp"
#include "pointstream/simulator.hpp"
#include "pointstream/upsample.hpp"
#include "pointstream/wire.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace pointstream {

/// Config file could not be read or does not follow the schema.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The knobs of the standard three-LiDAR rig that a config file can change.
struct RigSettings {
  int width = 1920;
  int height = 1080;
  double hfov_deg = 90.0;
  double camera_fps = 30.0;
  double camera_azimuth_deg = 0.0;
  int channels = 128;
  double vertical_fov_deg = 45.0;
  double rotation_hz = 10.0;
  double horizontal_step_deg = 360.0 / 1024.0;
  double range_min = 1.0;
  double range_max = 200.0;
  double panel_transmittance = 1.0;
  std::array<double, 3> phase_offsets_deg = {0.0, 120.0, 240.0};
  std::array<std::array<double, 3>, 3> mounts = {{{0.0, 0.12, 0.05}, {0.0, -0.12, 0.05}, {0.0, 0.0, 0.20}}};
  std::array<double, 3> camera_position = {0.05, 0.0, 0.0};

  sim::RigConfig to_rig() const;
  friend bool operator==(const RigSettings&, const RigSettings&) = default;
};

struct StreamSettings {
  double fps = 30.0;  ///< 0 disables pacing
  int defocus_radius = 4;
  EncodeOptions encode;
  std::size_t queue_capacity = 4;
  /// "loopback", "file:<path>", "tcp://host:port" or "host:port"
  std::string endpoint = "loopback";
  int connect_attempts = 5;
  double connect_backoff_s = 0.2;  ///< doubled after each failed attempt

  PacingOptions pacing() const { return {fps, queue_capacity}; }
  friend bool operator==(const StreamSettings&, const StreamSettings&) = default;
};

struct PipelineConfig {
  /// Replaces the scene file's seed when set.
  std::optional<std::uint64_t> seed;
  std::string scene;  ///< scene file; relative paths resolve against the config file
  double duration_s = 3.0;
  unsigned threads = 0;
  RigSettings rig;
  FusionParams fusion;
  BilateralParams upsample;
  TransferParams transfer;
  StreamSettings stream;
  double recolor_interval_s = 900.0;
  int recolor_frames = 3;  ///< latest frames pooled as the dynamic cloud for recolouring
  int snapshot_interval = 30;  ///< frames
  std::string output_dir = "out";

  /// Throws ParameterError naming the offending key.
  void validate() const;
  /// Scene path with relative paths resolved against `base_dir`.
  std::filesystem::path scene_path(const std::filesystem::path& base_dir) const;
  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Throws ConfigError on malformed JSON, unknown keys or wrong types. Missing
/// keys keep their defaults. Does not validate value ranges.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);
/// Every field, pretty-printed; parse_config(emit_config(c)) == c.
std::string emit_config(const PipelineConfig& config);

}  // namespace pointstream
