#pragma once

#include <atomic>
#include <cstdint>

namespace pointstream {

/// Monotonic nanosecond clock.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ns() const = 0;
  virtual void sleep_until(std::int64_t t_ns) = 0;
  void sleep_for(std::int64_t d_ns) { sleep_until(now_ns() + d_ns); }
};

class SteadyClock final : public Clock {
 public:
  std::int64_t now_ns() const override;
  void sleep_until(std::int64_t t_ns) override;
};

/// Manually advanced clock; sleeping jumps time forward instantly.
class FakeClock final : public Clock {
 public:
  explicit FakeClock(std::int64_t start_ns = 0) : now_(start_ns) {}
  std::int64_t now_ns() const override { return now_.load(); }
  void sleep_until(std::int64_t t_ns) override;
  void advance(std::int64_t d_ns) { now_.fetch_add(d_ns); }
  void set(std::int64_t t_ns) { now_.store(t_ns); }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace pointstream
