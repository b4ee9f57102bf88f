#pragma once

#include "pointstream/clock.hpp"
#include "pointstream/codec.hpp"
#include "pointstream/transport.hpp"

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

namespace pointstream {

/// Writes [u32 LE length][blob].
void write_framed(ByteSink& sink, std::span<const std::uint8_t> blob);

/// One item pulled off the wire: either a structurally framed blob or an error
/// covering bytes that could not be framed.
struct WireItem {
  std::vector<std::uint8_t> blob;
  std::optional<DecodeError> error;
  std::size_t skipped_bytes = 0;
};

/// Splits a byte stream into frames. A length prefix is trusted only when it
/// is followed by the frame magic and agrees with the header's payload
/// lengths; otherwise the reader scans forward byte by byte for the next
/// position where both hold, and reports the skipped span as one error item.
class FrameReader {
 public:
  explicit FrameReader(ByteSource& source) : source_(source) {}

  /// Next item, or nullopt once the stream has ended.
  std::optional<WireItem> next();

 private:
  bool fill(std::size_t need);  // false at EOF with fewer than `need` bytes
  bool consistent_at(std::size_t pos) const;
  void compact();

  ByteSource& source_;
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
  bool eof_ = false;
  std::optional<WireItem> pending_;
};

struct ReceivedFrame {
  std::optional<RgbdFrame> frame;
  std::optional<DecodeError> error;
  std::size_t wire_bytes = 0;
  std::int64_t received_ns = 0;
  std::int64_t decoded_ns = 0;

  bool ok() const { return frame.has_value(); }
};

/// Reads and decodes frames in arrival order. Decode failures are surfaced as
/// items with `error` set; the stream continues.
class FrameReceiver {
 public:
  FrameReceiver(ByteSource& source, const Clock& clock) : reader_(source), clock_(clock) {}
  std::optional<ReceivedFrame> next();

 private:
  FrameReader reader_;
  const Clock& clock_;
};

std::vector<ReceivedFrame> receive_frames(ByteSource& source, const Clock& clock);

struct PacingOptions {
  double fps = 30.0;  ///< 0 sends as soon as a frame is available
  std::size_t queue_capacity = 4;

  friend bool operator==(const PacingOptions&, const PacingOptions&) = default;
};

/// Deadline n is start + round(n * 1e9 / fps) ns.
class SlotSchedule {
 public:
  SlotSchedule(std::int64_t start_ns, double fps) : start_(start_ns), fps_(fps) {}
  std::int64_t deadline(std::int64_t n) const;
  /// Smallest slot index whose deadline is >= t.
  std::int64_t first_slot_at_or_after(std::int64_t t_ns) const;
  bool paced() const { return fps_ > 0.0; }

 private:
  std::int64_t start_;
  double fps_;
};

struct OutgoingFrame {
  std::vector<std::uint8_t> blob;  ///< encoded frame without length prefix
  std::uint64_t frame_seq = 0;
  std::int64_t ready_ns = 0;  ///< time the frame reaches the send queue
};

struct SendRecord {
  std::uint64_t frame_seq = 0;
  std::int64_t slot = 0;
  std::int64_t deadline_ns = 0;
  std::int64_t sent_ns = 0;
  std::size_t wire_bytes = 0;
};

struct SendStats {
  std::vector<SendRecord> sent;
  std::vector<std::uint64_t> dropped_seqs;
  std::size_t dropped() const { return dropped_seqs.size(); }
};

/// Paced sender over a known arrival schedule. Frames enter a drop-oldest
/// queue when their ready time has passed; one frame leaves per slot. Under a
/// FakeClock the whole schedule is deterministic.
SendStats send_frames(std::span<const OutgoingFrame> frames, ByteSink& sink,
                      const PacingOptions& opts, Clock& clock);

/// Convenience: encodes frames (ready at capture_ts_ns) and sends them.
SendStats send_frames(std::span<const RgbdFrame> frames, ByteSink& sink, const PacingOptions& opts,
                      Clock& clock, const EncodeOptions& enc = {});

/// Thread-safe bounded FIFO. In drop-oldest mode a full push evicts the head;
/// otherwise push blocks until there is room.
template <typename T>
class BoundedQueue {
 public:
  BoundedQueue(std::size_t capacity, bool drop_oldest)
      : capacity_(capacity == 0 ? 1 : capacity), drop_oldest_(drop_oldest) {}

  /// Returns the evicted item, if any. Pushing to a closed queue is a no-op.
  std::optional<T> push(T item) {
    std::unique_lock lock(mu_);
    std::optional<T> evicted;
    if (!drop_oldest_) not_full_.wait(lock, [&] { return closed_ || q_.size() < capacity_; });
    if (closed_) return evicted;
    if (q_.size() >= capacity_) {
      evicted = std::move(q_.front());
      q_.pop_front();
    }
    q_.push_back(std::move(item));
    not_empty_.notify_one();
    return evicted;
  }

  /// Blocks until an item is available; nullopt once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !q_.empty(); });
    if (q_.empty()) return std::nullopt;
    T item = std::move(q_.front());
    q_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return q_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
  std::deque<T> q_;
  std::size_t capacity_;
  bool drop_oldest_;
  bool closed_ = false;
};

}  // namespace pointstream
