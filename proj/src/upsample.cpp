#include "pointstream/upsample.hpp"

#include "pointstream/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace pointstream {

void BilateralParams::validate() const {
  if (!(sigma_spatial > 0.0)) throw ParameterError("sigma_spatial must be > 0");
  if (!(sigma_range > 0.0)) throw ParameterError("sigma_range must be > 0");
  if (window_radius < 1) throw ParameterError("window_radius must be >= 1");
  if (!(min_weight >= 0.0)) throw ParameterError("min_weight must be >= 0");
}

namespace {

struct Sample {
  int u, v;
  double depth;
};

}  // namespace

DepthImage joint_bilateral_upsample(const DepthImage& sparse, const RgbImage& guide,
                                    const BilateralParams& params) {
  params.validate();
  if (!sparse.same_size(guide))
    throw ParameterError("joint_bilateral_upsample: depth and guide sizes differ");
  const int w = sparse.width(), h = sparse.height();
  const int r = params.window_radius;
  const int side = 2 * r + 1;

  std::vector<double> spatial(static_cast<std::size_t>(side) * side);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      spatial[(dy + r) * side + (dx + r)] =
          std::exp(-double(dx * dx + dy * dy) / (2.0 * params.sigma_spatial * params.sigma_spatial));

  // The Euclidean RGB Gaussian factors into one Gaussian per channel.
  std::array<double, 256> range{};
  const bool use_range = std::isfinite(params.sigma_range);
  for (int d = 0; d < 256; ++d)
    range[d] = use_range ? std::exp(-double(d * d) / (2.0 * params.sigma_range * params.sigma_range))
                         : 1.0;

  // Valid samples in raster order; each output pixel accumulates its window in
  // that same order, whatever the row banding.
  std::vector<Sample> samples;
  std::vector<std::size_t> row_start(static_cast<std::size_t>(h) + 1, 0);
  for (int v = 0; v < h; ++v) {
    row_start[v] = samples.size();
    for (int u = 0; u < w; ++u)
      if (sparse(u, v) > 0.0) samples.push_back({u, v, sparse(u, v)});
  }
  row_start[h] = samples.size();

  // Depths are accumulated as offsets from the first sample that reaches a
  // pixel, so a window of equal depths reproduces that depth exactly.
  std::vector<double> num(sparse.size(), 0.0), den(sparse.size(), 0.0), ref(sparse.size(), 0.0);
  const auto& g = guide.data();

  parallel_for_chunks(static_cast<std::size_t>(h), params.threads,
                      [&](std::size_t band_begin, std::size_t band_end) {
    const int b0 = static_cast<int>(band_begin), b1 = static_cast<int>(band_end);
    const std::size_t s0 = row_start[std::max(0, b0 - r)];
    const std::size_t s1 = row_start[std::min(h, b1 + r)];
    for (std::size_t s = s0; s < s1; ++s) {
      const Sample& q = samples[s];
      const ColorRgb8 gq = g[guide.index(q.u, q.v)];
      const int v0 = std::max({b0, q.v - r}), v1 = std::min({b1 - 1, q.v + r});
      const int u0 = std::max(0, q.u - r), u1 = std::min(w - 1, q.u + r);
      for (int v = v0; v <= v1; ++v) {
        const double* ws = &spatial[(q.v - v + r) * side];
        const std::size_t row = static_cast<std::size_t>(v) * w;
        for (int u = u0; u <= u1; ++u) {
          const ColorRgb8 gp = g[row + u];
          const double wt = ws[q.u - u + r] * range[std::abs(int(gp.r) - int(gq.r))] *
                            range[std::abs(int(gp.g) - int(gq.g))] *
                            range[std::abs(int(gp.b) - int(gq.b))];
          const std::size_t i = row + u;
          if (den[i] == 0.0) ref[i] = q.depth;
          num[i] += wt * (q.depth - ref[i]);
          den[i] += wt;
        }
      }
    }
  });

  DepthImage out(w, h, 0.0);
  auto& o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i)
    if (den[i] > 0.0 && den[i] >= params.min_weight) o[i] = ref[i] + num[i] / den[i];
  return out;
}

RgbdFrame densify_frame(const PointCloud& cloud, const RgbImage& rgb, const SensorModel& cam,
                        const BilateralParams& params) {
  if (!rgb.same_size(cam.intrinsics.width, cam.intrinsics.height))
    throw ParameterError("densify_frame: image size does not match camera intrinsics");
  RgbdFrame frame;
  frame.rgb = rgb;
  frame.depth = joint_bilateral_upsample(render_zbuffer(cloud, cam), rgb, params);
  if (cloud.timestamps_ns && !cloud.timestamps_ns->empty())
    frame.capture_ts_ns =
        *std::max_element(cloud.timestamps_ns->begin(), cloud.timestamps_ns->end());
  return frame;
}

}  // namespace pointstream
