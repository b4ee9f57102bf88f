#include "pointstream/clock.hpp"

#include <chrono>
#include <thread>

namespace pointstream {

std::int64_t SteadyClock::now_ns() const {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void SteadyClock::sleep_until(std::int64_t t_ns) {
  const auto target = std::chrono::steady_clock::time_point(std::chrono::nanoseconds(t_ns));
  std::this_thread::sleep_until(target);
}

void FakeClock::sleep_until(std::int64_t t_ns) {
  std::int64_t cur = now_.load();
  while (cur < t_ns && !now_.compare_exchange_weak(cur, t_ns)) {
  }
}

}  // namespace pointstream
