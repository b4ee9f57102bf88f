#pragma once

#include "pointstream/geometry.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace pointstream {

struct KMeansResult {
  std::vector<std::uint32_t> labels;
  std::vector<Point3> centers;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Deterministic for a fixed seed.
/// Empty clusters are re-seeded from the point farthest from its center.
/// Throws ParameterError when k < 1 or k > points.size().
KMeansResult kmeans(std::span<const Point3> points, int k, std::uint64_t seed, int max_iter);

}  // namespace pointstream
