#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace jumpctrl {

// Runs body(i) for i in [0, n). Work is split into fixed-size chunks claimed
// from a shared counter, so the partition never depends on the thread count;
// callers must write results into per-index slots and reduce afterwards in
// index order to keep outputs identical across thread counts.
inline void parallel_for_paths(std::size_t n, std::size_t n_threads,
                               const std::function<void(std::size_t)>& body) {
  constexpr std::size_t kChunk = 64;
  if (n == 0) return;
  if (n_threads <= 1 || n <= kChunk) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next_chunk{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::atomic<int> error_guard{0};

  auto worker = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t chunk = next_chunk.fetch_add(1);
      const std::size_t begin = chunk * kChunk;
      if (begin >= n) return;
      const std::size_t end = std::min(begin + kChunk, n);
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        if (error_guard.fetch_add(1) == 0) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  const std::size_t want = std::min(n_threads, (n + kChunk - 1) / kChunk);
  pool.reserve(want);
  for (std::size_t t = 0; t < want; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace jumpctrl
