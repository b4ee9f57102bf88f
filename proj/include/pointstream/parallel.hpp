#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace pointstream {

/// Number of worker threads used when a caller passes 0.
inline unsigned default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

/// Splits [0, n) into contiguous chunks and runs fn(begin, end) on each chunk,
/// one thread per chunk. Chunk boundaries depend only on n and `threads`, and
/// callers write disjoint outputs, so results do not depend on scheduling.
template <typename Fn>
void parallel_for_chunks(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t step = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = std::min(n, t * step);
    const std::size_t end = std::min(n, begin + step);
    if (begin == end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace pointstream
