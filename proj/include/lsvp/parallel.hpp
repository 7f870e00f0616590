#pragma once

// Minimal fork-join helper. Work items must be independent and write to
// disjoint outputs; the partition never changes what each item computes.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace lsvp {

namespace detail {
inline std::atomic<int>& thread_override() {
  static std::atomic<int> value{0};
  return value;
}
}  // namespace detail

// Programmatic cap; 0 restores the LSVP_THREADS / hardware default.
inline void set_thread_cap(int n) { detail::thread_override().store(n); }

inline int worker_count() {
  const int forced = detail::thread_override().load();
  if (forced > 0) return forced;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LSVP_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) return std::min<int>(cap, 256);
    } catch (...) {
    }
  }
  return static_cast<int>(hw);
}

// Calls fn(begin, end) on contiguous chunks of [0, n).
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_chunk = 16) {
  const std::size_t workers =
      std::min<std::size_t>(worker_count(), std::max<std::size_t>(1, n / min_chunk));
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(std::size_t{0}, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace lsvp
