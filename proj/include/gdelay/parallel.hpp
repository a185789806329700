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

namespace gdelay {

namespace detail {
inline std::atomic<int>& thread_limit_storage() {
  static std::atomic<int> limit{0};
  return limit;
}
}  // namespace detail

/// Cap on worker threads used by library loops. 0 means "use the environment
/// (GDELAY_THREADS) or the hardware concurrency".
inline void set_thread_limit(int n) { detail::thread_limit_storage() = std::max(0, n); }

inline int thread_limit() {
  const int set = detail::thread_limit_storage();
  if (set > 0) return set;
  if (const char* env = std::getenv("GDELAY_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, count). The first exception thrown by any task is
/// rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(thread_limit()), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace gdelay
