#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace hsigan {

// Thread cap: HSIGAN_THREADS env var, 0 or unset = hardware concurrency.
inline int max_threads() {
  if (const char* env = std::getenv("HSIGAN_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n). Each index writes only its own outputs, so the
// result is identical for any thread count.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  const int threads = max_threads();
  if (threads <= 1 || n < 2) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int nt = static_cast<int>(std::min<std::int64_t>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&, t]() {
      const std::int64_t lo = n * t / nt;
      const std::int64_t hi = n * (t + 1) / nt;
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace hsigan
