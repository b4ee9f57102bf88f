#pragma once

#include "pointstream/color.hpp"
#include "pointstream/errors.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pointstream {

/// Row-major image buffer.
template <typename Pixel>
class Image {
 public:
  Image() = default;
  Image(int width, int height, Pixel fill = Pixel{})
      : width_(width), height_(height), data_(checked_size(width, height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Pixel& operator()(int u, int v) { return data_[index(u, v)]; }
  const Pixel& operator()(int u, int v) const { return data_[index(u, v)]; }

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }

  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }

  std::span<Pixel> pixels() { return data_; }
  std::span<const Pixel> pixels() const { return data_; }
  std::vector<Pixel>& data() { return data_; }
  const std::vector<Pixel>& data() const { return data_; }

  bool same_size(int w, int h) const { return width_ == w && height_ == h; }
  template <typename Other>
  bool same_size(const Image<Other>& o) const {
    return same_size(o.width(), o.height());
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  static std::size_t checked_size(int w, int h) {
    if (w < 0 || h < 0)
      throw ParameterError("image dimensions must be non-negative: " + std::to_string(w) + "x" +
                           std::to_string(h));
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Pixel> data_;
};

using RgbImage = Image<ColorRgb8>;
/// Meters; 0 marks a pixel without a valid depth.
using DepthImage = Image<double>;

}  // namespace pointstream
