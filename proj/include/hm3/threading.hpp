#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace hm3 {

// Runs fn(i) for i in [0, n) across up to `threads` workers. Each index is
// processed exactly once; callers must make fn(i) write only to slot i so the
// result is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

unsigned resolve_thread_count(int requested);

} // namespace hm3
