#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace dyadlab {

/// Chunked parallel map over [0, n). Tasks must write only to their own
/// slots; merging stays with the caller, in index order, so results do not
/// depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
}

/// Thread count from the environment (DYADLAB_THREADS), defaulting to 1.
inline int thread_count_from_env() {
  if (const char* env = std::getenv("DYADLAB_THREADS")) {
    const int k = std::atoi(env);
    if (k >= 1) return k;
  }
  return 1;
}

}  // namespace dyadlab
