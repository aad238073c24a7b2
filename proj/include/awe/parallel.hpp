#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace awe {

// Runs fn over [0, n) split into one contiguous chunk per worker. Chunk
// boundaries depend only on n and threads, so any per-chunk accumulation
// reduced in chunk order is independent of scheduling.
inline void run_chunked(std::size_t n, int threads,
                        const std::function<void(int, std::size_t, std::size_t)>& fn) {
  const int t = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (t == 1) {
    if (n > 0) fn(0, 0, n);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(t);
  for (int w = 0; w < t; ++w) {
    const std::size_t begin = n * static_cast<std::size_t>(w) / t;
    const std::size_t end = n * static_cast<std::size_t>(w + 1) / t;
    workers.emplace_back([&, w, begin, end] {
      try {
        fn(w, begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& w : workers) w.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

inline int chunk_count(std::size_t n, int threads) {
  return std::max(1, std::min<int>(threads, static_cast<int>(n)));
}

}  // namespace awe
