#include "pointstream/neighbor_index.hpp"

#include "pointstream/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pointstream {

NeighborIndex::NeighborIndex(const PointCloud& cloud, double radius)
    : points_(cloud.points), radius_(radius) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw ParameterError("neighbor index radius must be positive, got " + std::to_string(radius));
  cells_.reserve(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i)
    cells_[key_of(cell_of(points_[i]))].push_back(static_cast<PointId>(i));
}

Eigen::Vector3i NeighborIndex::cell_of(const Point3& p) const {
  return (p / radius_).array().floor().cast<int>();
}

NeighborIndex::CellKey NeighborIndex::key_of(const Eigen::Vector3i& c) const {
  // 21 bits per axis, two's complement wrapped; collisions only merge buckets.
  constexpr std::uint64_t mask = (1u << 21) - 1;
  return (static_cast<std::uint64_t>(c.x()) & mask) |
         ((static_cast<std::uint64_t>(c.y()) & mask) << 21) |
         ((static_cast<std::uint64_t>(c.z()) & mask) << 42);
}

template <typename Fn>
void NeighborIndex::for_each_candidate(const Point3& p, Fn&& fn) const {
  const Eigen::Vector3i c = cell_of(p);
  // Hash collisions can make two neighbouring cells share a bucket; visit each
  // bucket once.
  const std::vector<PointId>* seen[27];
  int n_seen = 0;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const auto it = cells_.find(key_of(c + Eigen::Vector3i(dx, dy, dz)));
        if (it == cells_.end()) continue;
        if (std::find(seen, seen + n_seen, &it->second) != seen + n_seen) continue;
        seen[n_seen++] = &it->second;
        for (PointId id : it->second) fn(id);
      }
}

std::vector<PointId> NeighborIndex::query_radius(const Point3& p) const {
  std::vector<PointId> out;
  const double r2 = radius_ * radius_;
  for_each_candidate(p, [&](PointId id) {
    if ((points_[id] - p).squaredNorm() <= r2) out.push_back(id);
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<NeighborIndex::Neighbor> NeighborIndex::nearest(const Point3& p) const {
  const double r2 = radius_ * radius_;
  std::optional<PointId> best;
  double best_d2 = 0.0;
  for_each_candidate(p, [&](PointId id) {
    const double d2 = (points_[id] - p).squaredNorm();
    if (d2 > r2) return;
    if (!best || d2 < best_d2 || (d2 == best_d2 && id < *best)) {
      best = id;
      best_d2 = d2;
    }
  });
  if (!best) return std::nullopt;
  return Neighbor{*best, std::sqrt(best_d2)};
}

NeighborIndex build_index(const PointCloud& cloud, double radius) {
  return NeighborIndex(cloud, radius);
}

}  // namespace pointstream
