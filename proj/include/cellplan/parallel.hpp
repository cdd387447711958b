#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cellplan {

inline unsigned effective_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? hc : 1;
}

/// Runs fn(begin, end) over chunks of [0, count). Chunk boundaries depend only on
/// count and chunk_size, never on the thread count, so any writes keyed by index
/// (and any commutative reductions) give identical results for every schedule.
template <typename Fn>
inline void parallel_chunks(std::size_t count, unsigned threads, std::size_t chunk_size, Fn&& fn) {
  if (count == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const unsigned workers = effective_threads(threads);
  const std::size_t num_chunks = (count + chunk_size - 1) / chunk_size;
  if (workers == 1 || num_chunks == 1) {
    for (std::size_t c = 0; c < num_chunks; ++c) {
      const std::size_t begin = c * chunk_size;
      fn(begin, std::min(begin + chunk_size, count));
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= num_chunks || failed.load(std::memory_order_relaxed)) return;
      const std::size_t begin = c * chunk_size;
      try {
        fn(begin, std::min(begin + chunk_size, count));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  const unsigned spawned = static_cast<unsigned>(
      std::min<std::size_t>(workers, num_chunks));
  pool.reserve(spawned);
  for (unsigned w = 0; w < spawned; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace cellplan
