#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace cavload {

// Worker count: the requested number (0 = hardware concurrency), capped by
// the CAVITY_LOADER_THREADS environment variable when it is set.
inline unsigned worker_count(unsigned requested = 0) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CAVITY_LOADER_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return std::max(1u, n);
}

// Runs task(i) for i in [0, n) on a pool of workers. Results are written by
// index, so the outcome does not depend on scheduling. Exceptions are left
// to the task; an escaping exception is rethrown after all workers finish.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task, unsigned threads = 0) {
  const unsigned w = std::min<std::size_t>(worker_count(threads), std::max<std::size_t>(n, 1));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        task(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned k = 0; k < w; ++k) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace cavload
