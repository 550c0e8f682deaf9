#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tdbem {

// Worker count used by parallel_for; 0 selects the hardware concurrency.
void set_num_threads(int n);
int num_threads();

// Runs f(k) for k in [0, n) with dynamic scheduling. Each index is
// processed exactly once; the first exception is rethrown.
template <class F>
void parallel_for(int n, F&& f) {
  const int workers = std::min(num_threads(), n);
  if (workers <= 1) {
    for (int k = 0; k < n; ++k) f(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (int k = next++; k < n; k = next++) {
      try {
        f(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace tdbem
