// Chunked parallel loop over element indices. Thread count is capped by the
// NS_THREADS environment variable; results must be written to disjoint,
// preallocated slots so the outcome is independent of the schedule.

#ifndef HYNS_PARALLEL_HPP
#define HYNS_PARALLEL_HPP

#include <cstdlib>
#include <thread>
#include <vector>

namespace hyns {

inline unsigned thread_budget() {
  if (const char* env = std::getenv("NS_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

template <typename F>
void parallel_for(int n, F&& body, unsigned max_threads = 0) {
  unsigned nthreads = max_threads > 0 ? max_threads : thread_budget();
  if (nthreads > static_cast<unsigned>(n)) nthreads = n > 0 ? static_cast<unsigned>(n) : 1;
  if (nthreads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  const int chunk = (n + static_cast<int>(nthreads) - 1) / static_cast<int>(nthreads);
  for (unsigned t = 0; t < nthreads; ++t) {
    const int begin = static_cast<int>(t) * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] {
      for (int i = begin; i < end; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace hyns

#endif
