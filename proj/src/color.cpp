#include "pointstream/color.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace pointstream {
namespace {

constexpr double kEpsilon = 216.0 / 24389.0;  // (6/29)^3
constexpr double kDelta = 6.0 / 29.0;

double srgb_decode(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double srgb_encode(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) {
  return t > kEpsilon ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_finv(double f) {
  return f > kDelta ? f * f * f : 3.0 * kDelta * kDelta * (f - 4.0 / 29.0);
}

const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) t[i] = srgb_decode(i / 255.0);
    return t;
  }();
  return table;
}

ColorLab linear_to_lab(double r, double g, double b) {
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = lab_f(x / kWhiteX);
  const double fy = lab_f(y / kWhiteY);
  const double fz = lab_f(z / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::uint8_t to_byte(double linear) {
  const double v = std::clamp(srgb_encode(linear) * 255.0, 0.0, 255.0);
  return static_cast<std::uint8_t>(std::lround(v));
}

}  // namespace

ColorLab srgb_to_lab(ColorRgb8 c) {
  const auto& lin = linear_table();
  return linear_to_lab(lin[c.r], lin[c.g], lin[c.b]);
}

ColorRgb8 lab_to_srgb(const ColorLab& lab) {
  const double fy = (lab[0] + 16.0) / 116.0;
  const double fx = fy + lab[1] / 500.0;
  const double fz = fy - lab[2] / 200.0;
  const double x = kWhiteX * lab_finv(fx);
  const double y = kWhiteY * lab_finv(fy);
  const double z = kWhiteZ * lab_finv(fz);
  // NaN inputs fall through clamp as NaN; treat them as black.
  auto safe = [](double v) { return std::isfinite(v) ? v : 0.0; };
  const double r = safe(3.2404542 * x - 1.5371385 * y - 0.4985314 * z);
  const double g = safe(-0.9692660 * x + 1.8760108 * y + 0.0415560 * z);
  const double b = safe(0.0556434 * x - 0.2040259 * y + 1.0572252 * z);
  // Negative linear values have no sRGB encoding; clamp them to 0 first.
  return {to_byte(std::max(r, 0.0)), to_byte(std::max(g, 0.0)), to_byte(std::max(b, 0.0))};
}

std::vector<ColorLab> srgb_to_lab(std::span<const ColorRgb8> colors) {
  std::vector<ColorLab> out;
  out.reserve(colors.size());
  for (const auto& c : colors) out.push_back(srgb_to_lab(c));
  return out;
}

std::vector<ColorRgb8> lab_to_srgb(std::span<const ColorLab> labs) {
  std::vector<ColorRgb8> out;
  out.reserve(labs.size());
  for (const auto& l : labs) out.push_back(lab_to_srgb(l));
  return out;
}

}  // namespace pointstream
