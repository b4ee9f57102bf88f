#pragma once

#include "pointstream/frame.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pointstream {

/// Box blur with a (2r+1)^2 edge-clamped kernel; each channel is
/// floor(sum / (2r+1)^2). Radius 0 returns the input.
RgbImage defocus(const RgbImage& rgb, int radius);

enum class CodecId : std::uint8_t { Store = 0, Deflate = 1 };

enum class DepthUnit : std::uint8_t {
  Millimeter = 0,   ///< 1 mm steps, saturates at 65.535 m
  QuarterMm = 1,    ///< 0.25 mm steps, saturates at 16.38375 m
};

struct EncodeOptions {
  CodecId codec = CodecId::Deflate;
  DepthUnit depth_unit = DepthUnit::Millimeter;
  int deflate_level = 1;

  friend bool operator==(const EncodeOptions&, const EncodeOptions&) = default;
};

inline constexpr std::array<char, 4> kFrameMagic = {'P', 'S', 'F', '1'};
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 44;
/// Upper bound on an encoded frame; larger length prefixes are rejected.
inline constexpr std::size_t kMaxFrameBytes = std::size_t{1} << 30;

namespace frame_flags {
inline constexpr std::uint16_t kDefocused = 1u << 0;
inline constexpr std::uint16_t kDepthPresent = 1u << 1;
inline constexpr std::uint16_t kQuarterMm = 1u << 2;
inline constexpr std::uint16_t kKnown = kDefocused | kDepthPresent | kQuarterMm;
}  // namespace frame_flags

/// Fixed little-endian header preceding the two payloads.
struct FrameHeader {
  std::uint8_t version = kFrameVersion;
  std::uint8_t camera_id = 0;
  std::uint16_t flags = 0;
  std::uint64_t frame_seq = 0;
  std::uint64_t capture_ts_ns = 0;
  std::uint32_t width = 0, height = 0;
  std::uint32_t rgb_len = 0, depth_len = 0;
  std::uint32_t crc32 = 0;

  std::array<std::uint8_t, kFrameHeaderSize> pack() const;
  /// Reads the fields without validating them; bytes.size() must be >= 44.
  static FrameHeader unpack(std::span<const std::uint8_t> bytes);
};

class DecodeError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, UnsupportedVersion, CrcMismatch, Truncated, Malformed };

  DecodeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(DecodeError::Kind kind);

/// Depth in meters to wire units, 0 staying 0 and positive values >= 1.
std::uint16_t quantize_depth(double meters, DepthUnit unit);
double dequantize_depth(std::uint16_t q, DepthUnit unit);
double depth_saturation(DepthUnit unit);

/// Header + rgb payload + depth payload (no length prefix).
std::vector<std::uint8_t> encode_frame(const RgbdFrame& frame, const EncodeOptions& opts = {});

/// Inverse of encode_frame; throws DecodeError.
RgbdFrame decode_frame(std::span<const std::uint8_t> bytes);

/// IEEE 802.3 CRC-32.
std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t seed = 0);

}  // namespace pointstream
