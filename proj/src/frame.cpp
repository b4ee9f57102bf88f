#include "pointstream/frame.hpp"

#include <cmath>

namespace pointstream {

void RgbdFrame::validate() const {
  if (!rgb.same_size(depth)) throw ParameterError("frame rgb and depth sizes differ");
  for (double d : depth.pixels())
    if (!(d >= 0.0) || !std::isfinite(d))
      throw ParameterError("frame depth must be finite and non-negative");
}

}  // namespace pointstream
