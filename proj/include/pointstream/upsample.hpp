#pragma once

#include "pointstream/camera.hpp"
#include "pointstream/frame.hpp"

namespace pointstream {

struct BilateralParams {
  double sigma_spatial = 4.0;  ///< pixels
  double sigma_range = 20.0;   ///< 8-bit RGB units; +inf disables range weighting
  int window_radius = 8;       ///< pixels
  double min_weight = 1e-4;
  unsigned threads = 0;  ///< 0 = hardware concurrency; output does not depend on it

  void validate() const;
  friend bool operator==(const BilateralParams&, const BilateralParams&) = default;
};

/// RGB-guided joint bilateral filter over the valid (non-zero) samples of
/// `sparse`. Pixels whose total weight stays below min_weight are left at 0.
DepthImage joint_bilateral_upsample(const DepthImage& sparse, const RgbImage& guide,
                                    const BilateralParams& params);

/// z-buffer the cloud into the camera, then upsample with `rgb` as guide.
/// The frame timestamp is the newest point timestamp (0 when absent).
RgbdFrame densify_frame(const PointCloud& cloud, const RgbImage& rgb, const SensorModel& cam,
                        const BilateralParams& params);

}  // namespace pointstream
