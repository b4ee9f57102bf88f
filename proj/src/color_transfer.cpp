#include "pointstream/color_transfer.hpp"

#include "pointstream/errors.hpp"
#include "pointstream/kmeans.hpp"
#include "pointstream/neighbor_index.hpp"

#include <cmath>

namespace pointstream {

void TransferParams::validate() const {
  if (!(overlap_distance > 0.0) || !std::isfinite(overlap_distance))
    throw ParameterError("overlap distance l must be > 0");
  if (clusters < 1) throw ParameterError("cluster count k must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
  if (min_pairs < 1) throw ParameterError("min_pairs must be >= 1");
  if (kmeans_max_iter < 1) throw ParameterError("kmeans_max_iter must be >= 1");
}

namespace {

std::vector<OverlapPair> pair_points(const PointCloud& stat, const PointCloud& dyn, double l) {
  if (!(l > 0.0)) throw ParameterError("overlap distance l must be > 0");
  // Index only dynamic points without a dynamic motion label.
  PointCloud candidates;
  std::vector<PointId> to_dynamic;
  const bool flagged = dyn.dynamic_flags.has_value();
  for (std::size_t i = 0; i < dyn.size(); ++i) {
    if (flagged && (*dyn.dynamic_flags)[i]) continue;
    candidates.points.push_back(dyn.points[i]);
    to_dynamic.push_back(static_cast<PointId>(i));
  }
  const NeighborIndex index(candidates, l);
  std::vector<OverlapPair> pairs;
  for (std::size_t i = 0; i < stat.size(); ++i) {
    const auto nb = index.nearest(stat.points[i]);
    if (nb) pairs.push_back({static_cast<PointId>(i), to_dynamic[nb->id], nb->distance});
  }
  return pairs;
}

ColorLab blend(double alpha, const ColorLab& local, const ColorLab& global) {
  return global + alpha * (local - global);
}

}  // namespace

std::vector<OverlapPair> find_overlap_pairs(const PointCloud& static_cloud,
                                            const PointCloud& dynamic_cloud, double l) {
  if (!static_cloud.has_colors() || !dynamic_cloud.has_colors())
    throw ParameterError("find_overlap_pairs: both clouds must carry colors");
  return pair_points(static_cloud, dynamic_cloud, l);
}

ChannelStats lab_stats(std::span<const ColorLab> labs) {
  if (labs.empty()) throw InsufficientSamples("lab_stats: no samples");
  // Welford's running moments.
  ColorLab mean = ColorLab::Zero(), m2 = ColorLab::Zero();
  std::size_t n = 0;
  for (const auto& c : labs) {
    ++n;
    const ColorLab delta = c - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta.cwiseProduct(c - mean);
  }
  ChannelStats s;
  s.mean = mean;
  s.stddev = (m2 / static_cast<double>(n)).cwiseMax(0.0).cwiseSqrt();
  s.count = n;
  return s;
}

ChannelStats lab_stats(const PointCloud& cloud, std::span<const PointId> ids) {
  if (!cloud.has_colors()) throw ParameterError("lab_stats: cloud has no colors");
  std::vector<ColorLab> labs;
  labs.reserve(ids.size());
  for (PointId id : ids) labs.push_back(srgb_to_lab((*cloud.colors)[id]));
  return lab_stats(labs);
}

ColorLab global_transfer(const ColorLab& c, const ChannelStats& src, const ChannelStats& dst) {
  ColorLab out;
  for (int ch = 0; ch < 3; ++ch) {
    const double scale = src.stddev[ch] <= kStdFloor ? 1.0 : dst.stddev[ch] / src.stddev[ch];
    out[ch] = (c[ch] - src.mean[ch]) * scale + dst.mean[ch];
  }
  return out;
}

std::vector<ColorLab> global_transfer(std::span<const ColorLab> colors, const ChannelStats& src,
                                      const ChannelStats& dst) {
  std::vector<ColorLab> out;
  out.reserve(colors.size());
  for (const auto& c : colors) out.push_back(global_transfer(c, src, dst));
  return out;
}

std::vector<std::uint32_t> cluster_static(const PointCloud& static_cloud, int k,
                                          std::uint64_t seed, int max_iter) {
  return kmeans(static_cloud.points, k, seed, max_iter).labels;
}

TransferResult transfer_colors_lab(const PointCloud& static_cloud,
                                   std::span<const ColorLab> static_lab,
                                   const PointCloud& dynamic_cloud, const TransferParams& params) {
  params.validate();
  if (static_lab.size() != static_cloud.size())
    throw ParameterError("transfer_colors: static Lab values do not match the static cloud");
  if (!dynamic_cloud.has_colors())
    throw ParameterError("transfer_colors: dynamic cloud has no colors");

  const auto pairs = pair_points(static_cloud, dynamic_cloud, params.overlap_distance);
  if (pairs.size() < params.min_pairs) throw InsufficientOverlap(pairs.size(), params.min_pairs);

  std::vector<ColorLab> src_lab, dst_lab;
  src_lab.reserve(pairs.size());
  dst_lab.reserve(pairs.size());
  for (const auto& p : pairs) {
    src_lab.push_back(static_lab[p.static_id]);
    dst_lab.push_back(srgb_to_lab((*dynamic_cloud.colors)[p.dynamic_id]));
  }

  TransferResult res;
  auto& rep = res.report;
  rep.pair_count = pairs.size();
  rep.global_src = lab_stats(src_lab);
  rep.global_dst = lab_stats(dst_lab);

  const auto global = global_transfer(static_lab, rep.global_src, rep.global_dst);
  const int k = params.clusters;
  const auto labels = cluster_static(static_cloud, k, params.kmeans_seed, params.kmeans_max_iter);

  // Pair indices per cluster, preserving pair order.
  std::vector<std::vector<std::size_t>> by_cluster(k);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    by_cluster[labels[pairs[i].static_id]].push_back(i);

  rep.clusters.resize(k);
  std::vector<ChannelStats> local_src(k), local_dst(k);
  for (int c = 0; c < k; ++c) {
    auto& cr = rep.clusters[c];
    cr.pairs = by_cluster[c].size();
    if (cr.pairs < params.min_pairs) continue;
    std::vector<ColorLab> s, d;
    s.reserve(cr.pairs);
    d.reserve(cr.pairs);
    for (std::size_t i : by_cluster[c]) {
      s.push_back(src_lab[i]);
      d.push_back(dst_lab[i]);
    }
    cr.local = true;
    cr.src = local_src[c] = lab_stats(s);
    cr.dst = local_dst[c] = lab_stats(d);
  }

  res.lab.resize(static_cloud.size());
  for (std::size_t i = 0; i < static_cloud.size(); ++i) {
    const auto c = labels[i];
    ++rep.clusters[c].points;
    if (!rep.clusters[c].local) {
      res.lab[i] = global[i];
      continue;
    }
    const ColorLab local = global_transfer(static_lab[i], local_src[c], local_dst[c]);
    res.lab[i] = blend(params.alpha, local, global[i]);
  }

  std::vector<ColorLab> after;
  after.reserve(pairs.size());
  for (const auto& p : pairs) after.push_back(res.lab[p.static_id]);
  rep.after = lab_stats(after);

  res.cloud = static_cloud;
  res.cloud.colors = lab_to_srgb(res.lab);
  return res;
}

TransferResult transfer_colors(const PointCloud& static_cloud, const PointCloud& dynamic_cloud,
                               const TransferParams& params) {
  if (!static_cloud.has_colors())
    throw ParameterError("transfer_colors: static cloud has no colors");
  const auto lab = srgb_to_lab(*static_cloud.colors);
  return transfer_colors_lab(static_cloud, lab, dynamic_cloud, params);
}

}  // namespace pointstream
