#include "pointstream/wire.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace pointstream {
namespace {

std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

constexpr std::size_t kPrefix = 4;

}  // namespace

void write_framed(ByteSink& sink, std::span<const std::uint8_t> blob) {
  if (blob.size() > kMaxFrameBytes) throw ParameterError("frame too large for wire format");
  const auto n = static_cast<std::uint32_t>(blob.size());
  const std::uint8_t prefix[4] = {std::uint8_t(n), std::uint8_t(n >> 8), std::uint8_t(n >> 16),
                                  std::uint8_t(n >> 24)};
  std::vector<std::uint8_t> msg;
  msg.reserve(kPrefix + blob.size());
  msg.insert(msg.end(), prefix, prefix + 4);
  msg.insert(msg.end(), blob.begin(), blob.end());
  sink.write(msg);
}

bool FrameReader::fill(std::size_t need) {
  while (buf_.size() - pos_ < need) {
    if (eof_) return false;
    std::uint8_t tmp[64 * 1024];
    const std::size_t n = source_.read(tmp);
    if (n == 0) {
      eof_ = true;
      return false;
    }
    buf_.insert(buf_.end(), tmp, tmp + n);
  }
  return true;
}

bool FrameReader::consistent_at(std::size_t pos) const {
  const std::uint8_t* p = buf_.data() + pos;
  const std::uint32_t len = le32(p);
  if (len < kFrameHeaderSize || len > kMaxFrameBytes) return false;
  if (std::memcmp(p + kPrefix, kFrameMagic.data(), 4) != 0) return false;
  const std::uint64_t rgb_len = le32(p + kPrefix + 32);
  const std::uint64_t depth_len = le32(p + kPrefix + 36);
  return kFrameHeaderSize + rgb_len + depth_len == len;
}

void FrameReader::compact() {
  if (pos_ > (1u << 20) && pos_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
}

std::optional<WireItem> FrameReader::next() {
  if (pending_) {
    auto item = std::move(*pending_);
    pending_.reset();
    return item;
  }
  std::size_t skipped = 0;
  auto skip_error = [&](const char* what) {
    WireItem e;
    e.error.emplace(DecodeError::Kind::Truncated, what);
    e.skipped_bytes = skipped;
    return e;
  };
  for (;;) {
    compact();
    if (!fill(kPrefix + kFrameHeaderSize)) {
      skipped += buf_.size() - pos_;
      pos_ = buf_.size();
      if (skipped == 0) return std::nullopt;
      return skip_error("stream ended inside an unframed region");
    }
    if (!consistent_at(pos_)) {
      ++pos_;
      ++skipped;
      continue;
    }
    const std::size_t len = le32(buf_.data() + pos_);
    if (!fill(kPrefix + len)) {
      skipped += buf_.size() - pos_;
      pos_ = buf_.size();
      return skip_error("stream ended inside a frame");
    }
    WireItem item;
    item.blob.assign(buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + kPrefix),
                     buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + kPrefix + len));
    pos_ += kPrefix + len;
    if (skipped == 0) return item;
    pending_ = std::move(item);
    return skip_error("lost framing; skipped to next frame boundary");
  }
}

std::optional<ReceivedFrame> FrameReceiver::next() {
  auto item = reader_.next();
  if (!item) return std::nullopt;
  ReceivedFrame out;
  out.received_ns = clock_.now_ns();
  out.wire_bytes = item->blob.size() + item->skipped_bytes;
  if (item->error) {
    out.error = std::move(item->error);
  } else {
    try {
      out.frame = decode_frame(item->blob);
    } catch (const DecodeError& e) {
      out.error = e;
    }
  }
  out.decoded_ns = clock_.now_ns();
  return out;
}

std::vector<ReceivedFrame> receive_frames(ByteSource& source, const Clock& clock) {
  FrameReceiver rx(source, clock);
  std::vector<ReceivedFrame> out;
  while (auto f = rx.next()) out.push_back(std::move(*f));
  return out;
}

std::int64_t SlotSchedule::deadline(std::int64_t n) const {
  if (!paced()) return start_;
  return start_ + std::llround(static_cast<double>(n) * 1e9 / fps_);
}

std::int64_t SlotSchedule::first_slot_at_or_after(std::int64_t t_ns) const {
  if (!paced() || t_ns <= start_) return 0;
  auto n = static_cast<std::int64_t>(std::floor(static_cast<double>(t_ns - start_) * fps_ / 1e9));
  while (deadline(n) < t_ns) ++n;
  while (n > 0 && deadline(n - 1) >= t_ns) --n;
  return n;
}

SendStats send_frames(std::span<const OutgoingFrame> frames, ByteSink& sink,
                      const PacingOptions& opts, Clock& clock) {
  SendStats stats;
  if (frames.empty()) return stats;
  const SlotSchedule schedule(frames.front().ready_ns, opts.fps);
  const std::size_t capacity = std::max<std::size_t>(1, opts.queue_capacity);
  std::deque<std::size_t> queue;
  std::size_t next = 0;
  std::int64_t slot = 0;
  for (;;) {
    const std::int64_t deadline =
        schedule.paced() ? schedule.deadline(slot) : clock.now_ns();
    clock.sleep_until(deadline);
    const std::int64_t now = clock.now_ns();
    while (next < frames.size() && frames[next].ready_ns <= now) {
      if (queue.size() >= capacity) {
        stats.dropped_seqs.push_back(frames[queue.front()].frame_seq);
        queue.pop_front();
      }
      queue.push_back(next++);
    }
    if (queue.empty()) {
      if (next == frames.size()) break;
      if (schedule.paced())
        slot = schedule.first_slot_at_or_after(frames[next].ready_ns);
      else
        clock.sleep_until(frames[next].ready_ns);
      continue;
    }
    const OutgoingFrame& f = frames[queue.front()];
    queue.pop_front();
    SendRecord rec{f.frame_seq, slot, deadline, clock.now_ns(), f.blob.size() + 4};
    write_framed(sink, f.blob);
    stats.sent.push_back(rec);
    if (schedule.paced()) slot = std::max(slot + 1, schedule.first_slot_at_or_after(clock.now_ns()));
  }
  sink.close();
  return stats;
}

SendStats send_frames(std::span<const RgbdFrame> frames, ByteSink& sink, const PacingOptions& opts,
                      Clock& clock, const EncodeOptions& enc) {
  std::vector<OutgoingFrame> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back({encode_frame(f, enc), f.frame_seq, f.capture_ts_ns});
  return send_frames(out, sink, opts, clock);
}

}  // namespace pointstream
