#include "pointstream/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace pointstream {

const char* to_string(DecodeError::Kind kind) {
  switch (kind) {
    case DecodeError::Kind::BadMagic: return "bad_magic";
    case DecodeError::Kind::UnsupportedVersion: return "unsupported_version";
    case DecodeError::Kind::CrcMismatch: return "crc_mismatch";
    case DecodeError::Kind::Truncated: return "truncated";
    case DecodeError::Kind::Malformed: return "malformed";
  }
  return "unknown";
}

RgbImage defocus(const RgbImage& rgb, int radius) {
  if (radius < 0) throw ParameterError("defocus radius must be >= 0");
  if (radius == 0 || rgb.empty()) return rgb;
  const int w = rgb.width(), h = rgb.height();
  auto clampi = [](int x, int lo, int hi) { return std::min(std::max(x, lo), hi); };

  // Horizontal box sums with clamped edges, then vertical sums of those.
  std::vector<std::array<std::uint32_t, 3>> hsum(rgb.size());
  for (int v = 0; v < h; ++v) {
    std::array<std::uint32_t, 3> acc{0, 0, 0};
    for (int d = -radius; d <= radius; ++d) {
      const auto& c = rgb(clampi(d, 0, w - 1), v);
      acc[0] += c.r, acc[1] += c.g, acc[2] += c.b;
    }
    for (int u = 0; u < w; ++u) {
      hsum[rgb.index(u, v)] = acc;
      const auto& out = rgb(clampi(u - radius, 0, w - 1), v);
      const auto& in = rgb(clampi(u + radius + 1, 0, w - 1), v);
      acc[0] += in.r - out.r, acc[1] += in.g - out.g, acc[2] += in.b - out.b;
    }
  }
  const std::uint32_t area = static_cast<std::uint32_t>((2 * radius + 1) * (2 * radius + 1));
  // floor(x / area) as a multiply-shift; exact while x < 2^24 and area < 2^16,
  // which covers every box sum of 8-bit values with radius <= 127.
  const std::uint64_t magic = (std::uint64_t{1} << 40) / area + 1;
  auto div_area = [&](std::uint32_t x) {
    return static_cast<std::uint8_t>(area < (1u << 16) ? (x * magic) >> 40 : x / area);
  };
  RgbImage out(w, h);
  // Running column sums over a window of rows, slid down one row at a time.
  std::vector<std::array<std::uint32_t, 3>> acc(static_cast<std::size_t>(w), {0, 0, 0});
  auto add_row = [&](int v, int sign) {
    const auto* row = hsum.data() + rgb.index(0, clampi(v, 0, h - 1));
    for (int u = 0; u < w; ++u)
      for (int c = 0; c < 3; ++c) acc[u][c] += static_cast<std::uint32_t>(sign) * row[u][c];
  };
  for (int d = -radius; d <= radius; ++d) add_row(d, 1);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u)
      out(u, v) = {div_area(acc[u][0]), div_area(acc[u][1]), div_area(acc[u][2])};
    add_row(v + radius + 1, 1);
    add_row(v - radius, -1);
  }
  return out;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t seed) {
  uLong crc = seed;
  std::size_t off = 0;
  while (off < bytes.size()) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = ::crc32(crc, bytes.data() + off, chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

double unit_scale(DepthUnit unit) { return unit == DepthUnit::QuarterMm ? 4000.0 : 1000.0; }

template <typename T>
void put(std::uint8_t* p, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

template <typename T>
T get(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(T(p[i]) << (8 * i));
  return v;
}

std::vector<std::uint8_t> compress(std::span<const std::uint8_t> raw, const EncodeOptions& o) {
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(o.codec));
  if (o.codec == CodecId::Store) {
    out.insert(out.end(), raw.begin(), raw.end());
    return out;
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  out.resize(1 + bound);
  const int rc = compress2(out.data() + 1, &bound, raw.data(), static_cast<uLong>(raw.size()),
                           o.deflate_level);
  if (rc != Z_OK) throw std::runtime_error("deflate failed");
  out.resize(1 + bound);
  return out;
}

std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> payload, std::size_t expected,
                                     const char* what) {
  using K = DecodeError::Kind;
  if (payload.empty()) throw DecodeError(K::Malformed, std::string(what) + " payload is empty");
  const auto codec = payload[0];
  const auto body = payload.subspan(1);
  if (codec == static_cast<std::uint8_t>(CodecId::Store)) {
    if (body.size() != expected)
      throw DecodeError(K::Malformed, std::string(what) + " payload has wrong size");
    return {body.begin(), body.end()};
  }
  if (codec != static_cast<std::uint8_t>(CodecId::Deflate))
    throw DecodeError(K::Malformed, std::string(what) + " payload has unknown codec id " +
                                        std::to_string(codec));
  std::vector<std::uint8_t> raw(expected);
  uLongf len = static_cast<uLongf>(expected);
  const int rc = uncompress(raw.data(), &len, body.data(), static_cast<uLong>(body.size()));
  if (rc != Z_OK || len != expected)
    throw DecodeError(K::Malformed, std::string(what) + " payload failed to inflate");
  return raw;
}

}  // namespace

std::array<std::uint8_t, kFrameHeaderSize> FrameHeader::pack() const {
  std::array<std::uint8_t, kFrameHeaderSize> b{};
  std::memcpy(b.data(), kFrameMagic.data(), 4);
  b[4] = version;
  b[5] = camera_id;
  put(b.data() + 6, flags);
  put(b.data() + 8, frame_seq);
  put(b.data() + 16, capture_ts_ns);
  put(b.data() + 24, width);
  put(b.data() + 28, height);
  put(b.data() + 32, rgb_len);
  put(b.data() + 36, depth_len);
  put(b.data() + 40, crc32);
  return b;
}

FrameHeader FrameHeader::unpack(std::span<const std::uint8_t> b) {
  FrameHeader h;
  h.version = b[4];
  h.camera_id = b[5];
  h.flags = get<std::uint16_t>(b.data() + 6);
  h.frame_seq = get<std::uint64_t>(b.data() + 8);
  h.capture_ts_ns = get<std::uint64_t>(b.data() + 16);
  h.width = get<std::uint32_t>(b.data() + 24);
  h.height = get<std::uint32_t>(b.data() + 28);
  h.rgb_len = get<std::uint32_t>(b.data() + 32);
  h.depth_len = get<std::uint32_t>(b.data() + 36);
  h.crc32 = get<std::uint32_t>(b.data() + 40);
  return h;
}

double depth_saturation(DepthUnit unit) { return 65535.0 / unit_scale(unit); }

std::uint16_t quantize_depth(double meters, DepthUnit unit) {
  if (!(meters > 0.0)) return 0;
  const double q = std::round(meters * unit_scale(unit));
  return static_cast<std::uint16_t>(std::clamp(q, 1.0, 65535.0));
}

double dequantize_depth(std::uint16_t q, DepthUnit unit) { return q / unit_scale(unit); }

std::vector<std::uint8_t> encode_frame(const RgbdFrame& frame, const EncodeOptions& opts) {
  frame.validate();
  if (opts.codec != CodecId::Store && opts.codec != CodecId::Deflate)
    throw ParameterError("unknown codec id");
  const std::size_t npx = frame.rgb.size();

  std::vector<std::uint8_t> rgb_raw(npx * 3);
  for (std::size_t i = 0; i < npx; ++i) {
    const auto& c = frame.rgb.data()[i];
    rgb_raw[3 * i] = c.r, rgb_raw[3 * i + 1] = c.g, rgb_raw[3 * i + 2] = c.b;
  }
  std::vector<std::uint8_t> depth_raw(npx * 2);
  for (std::size_t i = 0; i < npx; ++i)
    put(depth_raw.data() + 2 * i, quantize_depth(frame.depth.data()[i], opts.depth_unit));

  const auto rgb_payload = compress(rgb_raw, opts);
  const auto depth_payload = compress(depth_raw, opts);

  FrameHeader h;
  h.camera_id = frame.camera_id;
  h.flags = frame_flags::kDepthPresent;
  if (frame.defocused) h.flags |= frame_flags::kDefocused;
  if (opts.depth_unit == DepthUnit::QuarterMm) h.flags |= frame_flags::kQuarterMm;
  h.frame_seq = frame.frame_seq;
  h.capture_ts_ns = static_cast<std::uint64_t>(frame.capture_ts_ns);
  h.width = static_cast<std::uint32_t>(frame.width());
  h.height = static_cast<std::uint32_t>(frame.height());
  h.rgb_len = static_cast<std::uint32_t>(rgb_payload.size());
  h.depth_len = static_cast<std::uint32_t>(depth_payload.size());
  h.crc32 = crc32(depth_payload, crc32(rgb_payload));

  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderSize + rgb_payload.size() + depth_payload.size());
  const auto hb = h.pack();
  out.insert(out.end(), hb.begin(), hb.end());
  out.insert(out.end(), rgb_payload.begin(), rgb_payload.end());
  out.insert(out.end(), depth_payload.begin(), depth_payload.end());
  return out;
}

RgbdFrame decode_frame(std::span<const std::uint8_t> bytes) {
  using K = DecodeError::Kind;
  if (bytes.size() < kFrameHeaderSize) throw DecodeError(K::Truncated, "frame shorter than header");
  if (!std::equal(kFrameMagic.begin(), kFrameMagic.end(), bytes.begin(),
                  [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }))
    throw DecodeError(K::BadMagic, "frame magic is not PSF1");
  const FrameHeader h = FrameHeader::unpack(bytes);
  if (h.version != kFrameVersion)
    throw DecodeError(K::UnsupportedVersion,
                      "unsupported frame version " + std::to_string(h.version));
  if (h.flags & ~frame_flags::kKnown) throw DecodeError(K::Malformed, "unknown header flags");
  if (!(h.flags & frame_flags::kDepthPresent))
    throw DecodeError(K::Malformed, "frame without depth payload");
  const std::size_t total = kFrameHeaderSize + std::size_t{h.rgb_len} + h.depth_len;
  if (bytes.size() < total) throw DecodeError(K::Truncated, "frame payload truncated");
  if (bytes.size() > total) throw DecodeError(K::Malformed, "trailing bytes after frame payload");
  const auto rgb_payload = bytes.subspan(kFrameHeaderSize, h.rgb_len);
  const auto depth_payload = bytes.subspan(kFrameHeaderSize + h.rgb_len, h.depth_len);
  if (crc32(depth_payload, crc32(rgb_payload)) != h.crc32)
    throw DecodeError(K::CrcMismatch, "frame payload checksum mismatch");

  const std::size_t npx = std::size_t{h.width} * h.height;
  if (h.width > (1u << 16) || h.height > (1u << 16) || npx * 3 > kMaxFrameBytes)
    throw DecodeError(K::Malformed, "frame dimensions out of range");
  const auto rgb_raw = decompress(rgb_payload, npx * 3, "rgb");
  const auto depth_raw = decompress(depth_payload, npx * 2, "depth");

  const DepthUnit unit =
      (h.flags & frame_flags::kQuarterMm) ? DepthUnit::QuarterMm : DepthUnit::Millimeter;
  RgbdFrame f;
  f.rgb = RgbImage(static_cast<int>(h.width), static_cast<int>(h.height));
  f.depth = DepthImage(static_cast<int>(h.width), static_cast<int>(h.height));
  for (std::size_t i = 0; i < npx; ++i) {
    f.rgb.data()[i] = {rgb_raw[3 * i], rgb_raw[3 * i + 1], rgb_raw[3 * i + 2]};
    f.depth.data()[i] = dequantize_depth(get<std::uint16_t>(depth_raw.data() + 2 * i), unit);
  }
  f.capture_ts_ns = static_cast<std::int64_t>(h.capture_ts_ns);
  f.camera_id = h.camera_id;
  f.frame_seq = h.frame_seq;
  f.defocused = (h.flags & frame_flags::kDefocused) != 0;
  return f;
}

}  // namespace pointstream
