#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace randchan::detail {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

inline std::uint64_t chunk_count(std::uint64_t total, std::uint64_t chunk_size) {
  return (total + chunk_size - 1) / chunk_size;
}

// Runs fn(chunk_index, lo, hi) over fixed-size chunks of [0, total).  Chunk
// geometry depends only on (total, chunk_size), never on the thread count, so
// per-chunk results are identical however the chunks are scheduled; callers
// merge per-chunk results in chunk-index order to stay bitwise deterministic.
template <class Fn>
void for_each_chunk(std::uint64_t total, std::uint64_t chunk_size, int threads, Fn&& fn) {
  const std::uint64_t chunks = chunk_count(total, chunk_size);
  if (chunks == 0) return;
  const int workers = std::min<std::uint64_t>(resolve_threads(threads), chunks);
  if (workers <= 1) {
    for (std::uint64_t c = 0; c < chunks; ++c)
      fn(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
    return;
  }
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= chunks) return;
      fn(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers) - 1);
  for (int t = 0; t < workers - 1; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
}

}  // namespace randchan::detail
