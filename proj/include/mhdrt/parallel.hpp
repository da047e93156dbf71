#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace mhdrt {

/// Thread count: explicit request, else MHDRT_THREADS, else hardware.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MHDRT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Index-parallel map; results land at fixed indices so scheduling never
/// changes output order.
inline void parallel_for(int n, const std::function<void(int)>& body, int threads = 0) {
  const int nt = std::min(resolve_threads(threads), std::max(n, 1));
  if (nt <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&]() {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n) break;
        body(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace mhdrt
