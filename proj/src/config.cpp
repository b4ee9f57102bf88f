#include "pointstream/config.hpp"

#include "pointstream/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace pointstream {

sim::RigConfig RigSettings::to_rig() const {
  sim::RigConfig rig = sim::RigConfig::standard(width, height, hfov_deg);
  rig.camera_fps = camera_fps;
  rig.camera_azimuth_deg = camera_azimuth_deg;
  for (std::size_t i = 0; i < rig.lidars.size(); ++i) {
    auto& l = rig.lidars[i];
    l.channels = channels;
    l.vertical_fov_deg = vertical_fov_deg;
    l.rotation_hz = rotation_hz;
    l.horizontal_step_deg = horizontal_step_deg;
    l.range_min = range_min;
    l.range_max = range_max;
    l.panel_transmittance = panel_transmittance;
    l.phase_offset_deg = phase_offsets_deg[i];
    l.sensor_to_world.translation = Point3(mounts[i][0], mounts[i][1], mounts[i][2]);
  }
  const Point3 c(camera_position[0], camera_position[1], camera_position[2]);
  rig.camera.world_to_camera.translation = -(rig.camera.world_to_camera.rotation * c);
  return rig;
}

void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ParameterError(std::string("config: ") + what);
  };
  require(duration_s > 0.0, "duration_s must be > 0");
  require(rig.width > 0 && rig.height > 0, "rig.width and rig.height must be > 0");
  require(rig.hfov_deg > 0.0 && rig.hfov_deg < 180.0, "rig.hfov_deg must lie in (0, 180)");
  rig.to_rig().validate();
  fusion.validate();
  upsample.validate();
  transfer.validate();
  require(stream.fps >= 0.0, "stream.fps must be >= 0");
  require(stream.defocus_radius >= 0, "stream.defocus_radius must be >= 0");
  require(stream.queue_capacity >= 1, "stream.queue_capacity must be >= 1");
  require(stream.encode.deflate_level >= 0 && stream.encode.deflate_level <= 9,
          "stream.deflate_level must lie in [0, 9]");
  require(stream.connect_attempts >= 1, "stream.connect_attempts must be >= 1");
  require(stream.connect_backoff_s >= 0.0, "stream.connect_backoff_s must be >= 0");
  if (stream.endpoint != "loopback" && !stream.endpoint.starts_with("file:"))
    parse_endpoint(stream.endpoint);
  require(recolor_interval_s > 0.0, "recolor_interval_s must be > 0");
  require(recolor_frames >= 1, "recolor_frames must be >= 1");
  require(snapshot_interval >= 1, "snapshot_interval must be >= 1");
  require(!output_dir.empty(), "output_dir must not be empty");
}

std::filesystem::path PipelineConfig::scene_path(const std::filesystem::path& base_dir) const {
  const std::filesystem::path p(scene);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

namespace {

using nlohmann::json;

// Reads the keys of one JSON object, rejecting any key nobody asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(label() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(label() + "." + key + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown config key " + path(it.key().c_str()));
  }

 private:
  std::string label() const { return name_.empty() ? "config" : name_; }

  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

CodecId codec_from(const std::string& s) {
  if (s == "store") return CodecId::Store;
  if (s == "deflate") return CodecId::Deflate;
  throw ConfigError("stream.codec must be \"store\" or \"deflate\"");
}

DepthUnit unit_from(const std::string& s) {
  if (s == "mm") return DepthUnit::Millimeter;
  if (s == "quarter_mm") return DepthUnit::QuarterMm;
  throw ConfigError("stream.depth_unit must be \"mm\" or \"quarter_mm\"");
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  Section top(j, "");
  std::string format = "pointstream-config";
  int version = 1;
  top.get("format", format);
  top.get("version", version);
  if (format != "pointstream-config") throw ConfigError("format must be \"pointstream-config\"");
  if (version != 1) throw ConfigError("unsupported config version " + std::to_string(version));
  if (const json* sd = top.child("seed"); sd && !sd->is_null()) {
    if (!sd->is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    c.seed = sd->get<std::uint64_t>();
  }
  top.get("scene", c.scene);
  top.get("duration_s", c.duration_s);
  top.get("threads", c.threads);
  top.get("recolor_interval_s", c.recolor_interval_s);
  top.get("recolor_frames", c.recolor_frames);
  top.get("snapshot_interval", c.snapshot_interval);
  top.get("output_dir", c.output_dir);

  if (const json* r = top.child("rig")) {
    Section s(*r, "rig");
    auto& g = c.rig;
    s.get("width", g.width);
    s.get("height", g.height);
    s.get("hfov_deg", g.hfov_deg);
    s.get("camera_fps", g.camera_fps);
    s.get("camera_azimuth_deg", g.camera_azimuth_deg);
    s.get("channels", g.channels);
    s.get("vertical_fov_deg", g.vertical_fov_deg);
    s.get("rotation_hz", g.rotation_hz);
    s.get("horizontal_step_deg", g.horizontal_step_deg);
    s.get("range_min", g.range_min);
    s.get("range_max", g.range_max);
    s.get("panel_transmittance", g.panel_transmittance);
    s.get("phase_offsets_deg", g.phase_offsets_deg);
    s.get("mounts", g.mounts);
    s.get("camera_position", g.camera_position);
    s.finish();
  }
  if (const json* f = top.child("fusion")) {
    Section s(*f, "fusion");
    s.get("diff_threshold", c.fusion.diff_threshold);
    s.get("dilation_radius", c.fusion.dilation_radius);
    s.get("occlusion_margin", c.fusion.occlusion_margin);
    s.finish();
  }
  if (const json* u = top.child("upsample")) {
    Section s(*u, "upsample");
    s.get("sigma_spatial", c.upsample.sigma_spatial);
    if (const json* r = s.child("sigma_range")) {
      // null stands for an infinite range sigma (guide ignored).
      if (r->is_null())
        c.upsample.sigma_range = std::numeric_limits<double>::infinity();
      else if (r->is_number())
        c.upsample.sigma_range = r->get<double>();
      else
        throw ConfigError("upsample.sigma_range has the wrong type");
    }
    s.get("window_radius", c.upsample.window_radius);
    s.get("min_weight", c.upsample.min_weight);
    s.finish();
  }
  if (const json* t = top.child("transfer")) {
    Section s(*t, "transfer");
    s.get("l", c.transfer.overlap_distance);
    s.get("k", c.transfer.clusters);
    s.get("alpha", c.transfer.alpha);
    s.get("min_pairs", c.transfer.min_pairs);
    s.get("kmeans_seed", c.transfer.kmeans_seed);
    s.get("kmeans_max_iter", c.transfer.kmeans_max_iter);
    s.finish();
  }
  if (const json* st = top.child("stream")) {
    Section s(*st, "stream");
    std::string codec = "deflate", unit = "mm";
    s.get("fps", c.stream.fps);
    s.get("defocus_radius", c.stream.defocus_radius);
    s.get("codec", codec);
    s.get("depth_unit", unit);
    s.get("deflate_level", c.stream.encode.deflate_level);
    s.get("queue_capacity", c.stream.queue_capacity);
    s.get("endpoint", c.stream.endpoint);
    s.get("connect_attempts", c.stream.connect_attempts);
    s.get("connect_backoff_s", c.stream.connect_backoff_s);
    s.finish();
    c.stream.encode.codec = codec_from(codec);
    c.stream.encode.depth_unit = unit_from(unit);
  }
  top.finish();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string emit_config(const PipelineConfig& c) {
  const auto& g = c.rig;
  json j = {
      {"format", "pointstream-config"},
      {"version", 1},
      {"seed", c.seed ? json(*c.seed) : json(nullptr)},
      {"scene", c.scene},
      {"duration_s", c.duration_s},
      {"threads", c.threads},
      {"rig",
       {{"width", g.width},
        {"height", g.height},
        {"hfov_deg", g.hfov_deg},
        {"camera_fps", g.camera_fps},
        {"camera_azimuth_deg", g.camera_azimuth_deg},
        {"channels", g.channels},
        {"vertical_fov_deg", g.vertical_fov_deg},
        {"rotation_hz", g.rotation_hz},
        {"horizontal_step_deg", g.horizontal_step_deg},
        {"range_min", g.range_min},
        {"range_max", g.range_max},
        {"panel_transmittance", g.panel_transmittance},
        {"phase_offsets_deg", g.phase_offsets_deg},
        {"mounts", g.mounts},
        {"camera_position", g.camera_position}}},
      {"fusion",
       {{"diff_threshold", c.fusion.diff_threshold},
        {"dilation_radius", c.fusion.dilation_radius},
        {"occlusion_margin", c.fusion.occlusion_margin}}},
      {"upsample",
       {{"sigma_spatial", c.upsample.sigma_spatial},
        {"sigma_range", std::isfinite(c.upsample.sigma_range) ? json(c.upsample.sigma_range)
                                                              : json(nullptr)},
        {"window_radius", c.upsample.window_radius},
        {"min_weight", c.upsample.min_weight}}},
      {"transfer",
       {{"l", c.transfer.overlap_distance},
        {"k", c.transfer.clusters},
        {"alpha", c.transfer.alpha},
        {"min_pairs", c.transfer.min_pairs},
        {"kmeans_seed", c.transfer.kmeans_seed},
        {"kmeans_max_iter", c.transfer.kmeans_max_iter}}},
      {"stream",
       {{"fps", c.stream.fps},
        {"defocus_radius", c.stream.defocus_radius},
        {"codec", c.stream.encode.codec == CodecId::Store ? "store" : "deflate"},
        {"depth_unit", c.stream.encode.depth_unit == DepthUnit::QuarterMm ? "quarter_mm" : "mm"},
        {"deflate_level", c.stream.encode.deflate_level},
        {"queue_capacity", c.stream.queue_capacity},
        {"endpoint", c.stream.endpoint},
        {"connect_attempts", c.stream.connect_attempts},
        {"connect_backoff_s", c.stream.connect_backoff_s}}},
      {"recolor_interval_s", c.recolor_interval_s},
      {"recolor_frames", c.recolor_frames},
      {"snapshot_interval", c.snapshot_interval},
      {"output_dir", c.output_dir},
  };
  return j.dump(2) + "\n";
}

}  // namespace pointstream
