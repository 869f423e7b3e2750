#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pseudopost {

// Runs fn(i) for i in [0, n_items).  With n_workers <= 1 the loop is a plain
// serial loop; otherwise a shared atomic counter feeds worker threads.
// Callers must make fn(i) independent of execution order (each item derives
// its own random stream), so results never depend on the worker count.
// The first exception thrown by any item is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::int64_t n_items, int n_workers, Fn&& fn) {
  if (n_items <= 0) return;
  if (n_workers <= 1 || n_items == 1) {
    for (std::int64_t i = 0; i < n_items; ++i) fn(i);
    return;
  }

  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n_items) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n_items, std::memory_order_relaxed);
        return;
      }
    }
  };

  const int thread_count =
      static_cast<int>(std::min<std::int64_t>(n_workers, n_items));
  std::vector<std::thread> threads;
  threads.reserve(thread_count);
  for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Worker count from the PSEUDOPOST_WORKERS environment variable; defaults to
// 1 so library behavior is predictable unless parallelism is requested.
inline int default_worker_count() {
  if (const char* env = std::getenv("PSEUDOPOST_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed >= 1) return parsed;
  }
  return 1;
}

}  // namespace pseudopost
