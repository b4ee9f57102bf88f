#pragma once

#include "pointstream/point_cloud.hpp"

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

namespace pointstream {

/// Uniform voxel hash over a cloud's positions with cell edge = query radius.
/// Immutable after construction; concurrent queries are safe.
class NeighborIndex {
 public:
  struct Neighbor {
    PointId id;
    double distance;
  };

  /// Throws ParameterError when radius <= 0 or is not finite.
  NeighborIndex(const PointCloud& cloud, double radius);

  double radius() const { return radius_; }

  /// Ids i with |p_i - p| <= radius, ascending.
  std::vector<PointId> query_radius(const Point3& p) const;

  /// Closest point within radius; ties go to the lower id.
  std::optional<Neighbor> nearest(const Point3& p) const;

 private:
  using CellKey = std::uint64_t;

  CellKey key_of(const Eigen::Vector3i& cell) const;
  Eigen::Vector3i cell_of(const Point3& p) const;

  template <typename Fn>
  void for_each_candidate(const Point3& p, Fn&& fn) const;

  std::vector<Point3> points_;
  double radius_;
  std::unordered_map<CellKey, std::vector<PointId>> cells_;
};

NeighborIndex build_index(const PointCloud& cloud, double radius);

}  // namespace pointstream
