#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace rqo {

// Runs fn(i) for i in [0, n) across `threads` workers in static blocks.
// Each index is computed exactly once and written independently, so results
// are identical for any thread count.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t lo = n * w / workers;
    std::size_t hi = n * (w + 1) / workers;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace rqo
