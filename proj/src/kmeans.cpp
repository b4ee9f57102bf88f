#include "pointstream/kmeans.hpp"

#include "pointstream/errors.hpp"

#include <limits>
#include <random>
#include <string>

namespace pointstream {
namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<Point3> seed_plus_plus(std::span<const Point3> pts, int k, std::mt19937_64& rng) {
  const std::size_t n = pts.size();
  std::vector<Point3> centers;
  centers.reserve(k);
  centers.push_back(pts[rng() % n]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (pts[i] - centers[0]).squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick == n)  // rounding at the tail
        for (std::size_t i = n; i-- > 0;)
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
    } else {
      pick = rng() % n;
    }
    centers.push_back(pts[pick]);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (pts[i] - centers.back()).squaredNorm());
  }
  return centers;
}

}  // namespace

KMeansResult kmeans(std::span<const Point3> points, int k, std::uint64_t seed, int max_iter) {
  if (k < 1) throw ParameterError("k-means: k must be >= 1");
  if (static_cast<std::size_t>(k) > points.size())
    throw ParameterError("k-means: k = " + std::to_string(k) + " exceeds point count " +
                         std::to_string(points.size()));
  if (max_iter < 1) throw ParameterError("k-means: max_iter must be >= 1");

  const std::size_t n = points.size();
  std::mt19937_64 rng(seed);
  KMeansResult res;
  res.centers = seed_plus_plus(points, k, rng);
  res.labels.assign(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<double> dist2(n);

  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t best = 0;
      double best_d = (points[i] - res.centers[0]).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (points[i] - res.centers[c]).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::uint32_t>(c);
        }
      }
      dist2[i] = best_d;
      if (res.labels[i] != best) {
        res.labels[i] = best;
        changed = true;
      }
    }
    res.iterations = it + 1;
    if (!changed) break;

    std::vector<Point3> sum(k, Point3::Zero());
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[res.labels[i]] += points[i];
      ++count[res.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (count[c] > 0) {
        res.centers[c] = sum[c] / static_cast<double>(count[c]);
        continue;
      }
      // Re-seed an empty cluster at the worst-served point.
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (dist2[i] > dist2[far]) far = i;
      res.centers[c] = points[far];
      dist2[far] = 0.0;
    }
  }
  return res;
}

}  // namespace pointstream
