#include "pointstream/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace pointstream {

void FusionParams::validate() const {
  if (diff_threshold < 0) throw ParameterError("diff_threshold must be >= 0");
  if (dilation_radius < 0) throw ParameterError("dilation_radius must be >= 0");
  if (!(occlusion_margin > 0.0)) throw ParameterError("occlusion margin must be > 0");
}

MotionMask dilate(const MotionMask& mask, int radius) {
  if (radius <= 0) return mask;
  const int w = mask.width(), h = mask.height();
  // Separable: horizontal pass then vertical pass.
  MotionMask horiz(w, h, 0);
  for (int v = 0; v < h; ++v) {
    int last = -radius - 1;  // last dynamic column seen
    for (int u = 0; u < std::min(w, radius); ++u)
      if (mask(u, v)) last = u;
    for (int u = 0; u < w; ++u) {
      const int ahead = u + radius;
      if (ahead < w && mask(ahead, v)) last = ahead;
      horiz(u, v) = (last >= u - radius) ? 1 : 0;
    }
  }
  MotionMask out(w, h, 0);
  for (int u = 0; u < w; ++u) {
    int last = -radius - 1;
    for (int v = 0; v < std::min(h, radius); ++v)
      if (horiz(u, v)) last = v;
    for (int v = 0; v < h; ++v) {
      const int ahead = v + radius;
      if (ahead < h && horiz(u, ahead)) last = ahead;
      out(u, v) = (last >= v - radius) ? 1 : 0;
    }
  }
  return out;
}

MotionMask motion_mask(const RgbImage& prev, const RgbImage& curr, const FusionParams& params) {
  params.validate();
  if (!prev.same_size(curr)) throw ParameterError("motion_mask: frame sizes differ");
  MotionMask raw(curr.width(), curr.height(), 0);
  const auto a = prev.pixels();
  const auto b = curr.pixels();
  auto& m = raw.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int d = std::max({std::abs(int(a[i].r) - int(b[i].r)),
                            std::abs(int(a[i].g) - int(b[i].g)),
                            std::abs(int(a[i].b) - int(b[i].b))});
    m[i] = d > params.diff_threshold ? 1 : 0;
  }
  return dilate(raw, params.dilation_radius);
}

PointLabels classify_points(const PointCloud& scan, const MotionMask& mask,
                            const SensorModel& cam) {
  if (!mask.same_size(cam.intrinsics.width, cam.intrinsics.height))
    throw ParameterError("classify_points: mask size does not match camera");
  PointLabels out;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const auto id = static_cast<PointId>(i);
    const auto px = project_to_pixel(scan.points[i], cam);
    if (!px)
      out.unobserved_ids.push_back(id);
    else if (mask(px->u, px->v))
      out.dynamic_ids.push_back(id);
    else
      out.static_ids.push_back(id);
  }
  return out;
}

void ScanWindow::push(ScanEntry entry) {
  if (!entries_.empty() && entry.timestamp_ns <= entries_.back().timestamp_ns)
    throw DataError("scan window timestamps must increase strictly");
  if (entries_.size() == kCapacity) entries_.erase(entries_.begin());
  for (const auto& e : entries_)
    if (e.sensor_id == entry.sensor_id)
      throw DataError("scan window already holds a scan from sensor " +
                      std::to_string(entry.sensor_id));
  entries_.push_back(std::move(entry));
}

namespace {

void append_labelled(PointCloud& out, const ScanEntry& e, std::span<const PointId> ids,
                     std::uint8_t dynamic_flag) {
  for (PointId id : ids) {
    out.points.push_back(e.scan.points[id]);
    out.colors->push_back(e.scan.colors ? (*e.scan.colors)[id] : ColorRgb8{});
    out.sensor_ids->push_back(e.scan.sensor_ids ? (*e.scan.sensor_ids)[id] : e.sensor_id);
    out.timestamps_ns->push_back(e.scan.timestamps_ns ? (*e.scan.timestamps_ns)[id]
                                                      : e.timestamp_ns);
    out.dynamic_flags->push_back(dynamic_flag);
  }
}

}  // namespace

PointCloud fuse_window(const ScanWindow& window, std::span<const MotionMask> masks,
                       const std::map<std::uint8_t, SensorModel>& cams) {
  if (window.empty()) throw ParameterError("fuse_window: empty scan window");
  const auto entries = window.entries();
  if (masks.size() != entries.size())
    throw ParameterError("fuse_window: need one motion mask per scan");

  std::vector<PointLabels> labels;
  labels.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto cam = cams.find(entries[i].sensor_id);
    if (cam == cams.end())
      throw ParameterError("fuse_window: no camera model for sensor " +
                           std::to_string(entries[i].sensor_id));
    labels.push_back(classify_points(entries[i].scan, masks[i], cam->second));
  }

  PointCloud out;
  out.colors.emplace();
  out.sensor_ids.emplace();
  out.timestamps_ns.emplace();
  out.dynamic_flags.emplace();
  const bool colored = std::any_of(entries.begin(), entries.end(),
                                   [](const ScanEntry& e) { return e.scan.has_colors(); });

  const std::size_t newest = entries.size() - 1;
  for (std::size_t i = 0; i < newest; ++i) append_labelled(out, entries[i], labels[i].static_ids, 0);

  // Newest scan contributes every point, in its original order.
  const auto& last = labels[newest];
  std::vector<std::uint8_t> flag(entries[newest].scan.size(), 0);
  for (PointId id : last.dynamic_ids) flag[id] = 1;
  for (std::size_t i = 0; i < flag.size(); ++i) {
    const PointId id = static_cast<PointId>(i);
    append_labelled(out, entries[newest], std::span<const PointId>(&id, 1), flag[i]);
  }
  if (!colored) out.colors.reset();
  return out;
}

PointCloud occlusion_cull(const PointCloud& cloud, const SensorModel& cam, double margin) {
  if (!(margin > 0.0)) throw ParameterError("occlusion_cull: margin must be > 0");
  const auto& k = cam.intrinsics;
  std::vector<PixelIndex> px(cloud.size());
  std::vector<std::uint8_t> visible(cloud.size(), 0);
  DepthImage zbuf(k.width, k.height, 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = project_to_pixel(cloud.points[i], cam);
    if (!p) continue;
    px[i] = *p;
    visible[i] = 1;
    double& d = zbuf(p->u, p->v);
    if (d == 0.0 || p->z < d) d = p->z;
  }
  std::vector<PointId> keep;
  keep.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!visible[i]) continue;
    if (px[i].z - zbuf(px[i].u, px[i].v) > margin) continue;
    keep.push_back(static_cast<PointId>(i));
  }
  return select(cloud, keep);
}

}  // namespace pointstream
