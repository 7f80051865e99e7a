#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hybrid::detail {

/// Worker count from HYBRID_THREADS (default 1).
inline int thread_count() {
  static const int count = [] {
    const char* env = std::getenv("HYBRID_THREADS");
    const int n = env ? std::atoi(env) : 1;
    return std::max(1, n);
  }();
  return count;
}

/// Runs fn(i) for i in [0, n) over contiguous chunks. fn must only touch
/// state owned by index i; the first exception is rethrown after joining.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  const int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const int begin = n * w / workers;
    const int end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        for (int i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace hybrid::detail
