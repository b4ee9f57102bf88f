#pragma once

#include "pointstream/image.hpp"

#include <cstdint>

namespace pointstream {

/// Registered color + dense depth pair sharing one camera and timestamp.
struct RgbdFrame {
  RgbImage rgb;
  DepthImage depth;
  std::int64_t capture_ts_ns = 0;
  std::uint8_t camera_id = 0;
  std::uint64_t frame_seq = 0;
  bool defocused = false;

  int width() const { return rgb.width(); }
  int height() const { return rgb.height(); }

  /// Throws ParameterError if rgb and depth sizes differ or depth holds a
  /// negative or non-finite value.
  void validate() const;
};

}  // namespace pointstream
