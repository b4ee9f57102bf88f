#pragma once

#include "pointstream/point_cloud.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace pointstream {

/// Population mean and standard deviation per CIELAB channel.
struct ChannelStats {
  ColorLab mean = ColorLab::Zero();
  ColorLab stddev = ColorLab::Zero();
  std::size_t count = 0;
};

struct TransferParams {
  double overlap_distance = 0.15;  ///< l, meters
  int clusters = 16;               ///< k
  double alpha = 0.5;              ///< weight of the cluster-local correction
  std::size_t min_pairs = 100;
  std::uint64_t kmeans_seed = 0;
  int kmeans_max_iter = 50;

  void validate() const;
  friend bool operator==(const TransferParams&, const TransferParams&) = default;
};

/// Scale is taken as 1 when the source deviation is at or below this.
inline constexpr double kStdFloor = 1e-6;

struct OverlapPair {
  PointId static_id;
  PointId dynamic_id;
  double distance;
};

/// For each static point, its nearest dynamic point if within `l`. Sorted by
/// static id. Dynamic points flagged in `dynamic_flags` are never paired.
std::vector<OverlapPair> find_overlap_pairs(const PointCloud& static_cloud,
                                            const PointCloud& dynamic_cloud, double l);

/// Throws InsufficientSamples on empty input.
ChannelStats lab_stats(std::span<const ColorLab> labs);
ChannelStats lab_stats(const PointCloud& cloud, std::span<const PointId> ids);

/// c' = (c - mu_src) * sigma_dst / sigma_src + mu_dst per channel.
ColorLab global_transfer(const ColorLab& c, const ChannelStats& src, const ChannelStats& dst);
std::vector<ColorLab> global_transfer(std::span<const ColorLab> colors, const ChannelStats& src,
                                      const ChannelStats& dst);

std::vector<std::uint32_t> cluster_static(const PointCloud& static_cloud, int k,
                                          std::uint64_t seed, int max_iter);

struct ClusterReport {
  std::size_t points = 0;
  std::size_t pairs = 0;
  bool local = false;  ///< false when the cluster fell back to the global map
  ChannelStats src, dst;
};

struct TransferReport {
  std::size_t pair_count = 0;
  ChannelStats global_src;  ///< static side of the pairs, before transfer
  ChannelStats global_dst;  ///< dynamic side of the pairs
  ChannelStats after;       ///< static side of the pairs, after transfer
  std::vector<ClusterReport> clusters;
};

struct TransferResult {
  std::vector<ColorLab> lab;  ///< transferred static colors before quantisation
  PointCloud cloud;           ///< static geometry with quantised colors
  TransferReport report;
};

/// Colour transfer on Lab values directly, so results can be chained without
/// 8-bit quantisation. `static_lab` is parallel to static_cloud.points.
TransferResult transfer_colors_lab(const PointCloud& static_cloud,
                                   std::span<const ColorLab> static_lab,
                                   const PointCloud& dynamic_cloud, const TransferParams& params);

TransferResult transfer_colors(const PointCloud& static_cloud, const PointCloud& dynamic_cloud,
                               const TransferParams& params);

}  // namespace pointstream
