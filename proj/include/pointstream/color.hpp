#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace pointstream {

struct ColorRgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const ColorRgb8&, const ColorRgb8&) = default;
};
static_assert(sizeof(ColorRgb8) == 3, "ColorRgb8 images are written as packed byte triples");

/// CIELAB triple stored as (L, a, b).
using ColorLab = Eigen::Vector3d;

// D65 reference white, 2 degree observer.
inline constexpr double kWhiteX = 0.95047;
inline constexpr double kWhiteY = 1.00000;
inline constexpr double kWhiteZ = 1.08883;

ColorLab srgb_to_lab(ColorRgb8 c);

/// Inverse of srgb_to_lab. Out-of-gamut results are clamped to [0,255] per
/// channel before rounding.
ColorRgb8 lab_to_srgb(const ColorLab& lab);

/// Batch conversion through a linearisation table. Produces the same values as
/// the scalar overload.
std::vector<ColorLab> srgb_to_lab(std::span<const ColorRgb8> colors);
std::vector<ColorRgb8> lab_to_srgb(std::span<const ColorLab> labs);

}  // namespace pointstream
