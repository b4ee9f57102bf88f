#pragma once

#include "pointstream/camera.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace pointstream {

/// 1 = dynamic pixel.
using MotionMask = Image<std::uint8_t>;

struct FusionParams {
  int diff_threshold = 25;    ///< 8-bit intensity units, strict >
  int dilation_radius = 2;    ///< pixels, square structuring element
  double occlusion_margin = 0.10;  ///< meters

  void validate() const;
  friend bool operator==(const FusionParams&, const FusionParams&) = default;
};

/// A pixel is dynamic when max-channel |curr - prev| exceeds the threshold;
/// the result is dilated by `dilation_radius`.
MotionMask motion_mask(const RgbImage& prev, const RgbImage& curr, const FusionParams& params);

/// Square dilation with Chebyshev radius `radius`.
MotionMask dilate(const MotionMask& mask, int radius);

struct PointLabels {
  std::vector<PointId> static_ids;
  std::vector<PointId> dynamic_ids;
  std::vector<PointId> unobserved_ids;
};

PointLabels classify_points(const PointCloud& scan, const MotionMask& mask,
                            const SensorModel& cam);

struct ScanEntry {
  PointCloud scan;
  std::int64_t timestamp_ns = 0;
  std::uint8_t sensor_id = 0;
};

/// Up to three most recent scans, oldest first.
class ScanWindow {
 public:
  static constexpr std::size_t kCapacity = 3;

  /// Appends a scan, evicting the oldest when full. Throws DataError if the
  /// timestamp does not increase or the sensor already has an entry that
  /// would remain in the window.
  void push(ScanEntry entry);

  std::span<const ScanEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<ScanEntry> entries_;
};

/// Static points from every scan in the window, then every point of the newest
/// scan. `masks[i]` belongs to window entry i; `cams` is keyed by sensor id.
/// Output carries sensor_ids, timestamps_ns and dynamic_flags.
PointCloud fuse_window(const ScanWindow& window, std::span<const MotionMask> masks,
                       const std::map<std::uint8_t, SensorModel>& cams);

/// Drops points further than `margin` behind the camera's z-buffer at their
/// pixel, and points that do not project into the image.
PointCloud occlusion_cull(const PointCloud& cloud, const SensorModel& cam, double margin);

}  // namespace pointstream
