#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cgpseg {

/// Calls fn(i) for i in [0, n) on up to `workers` threads (the caller counts
/// as one). Results must be written to per-index slots; the first exception
/// is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

/// Worker count from CGPSEG_WORKERS, else 1.
inline int default_workers() {
  if (const char* env = std::getenv("CGPSEG_WORKERS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (...) {
    }
  }
  return 1;
}

}  // namespace cgpseg
