#include "cohortsbi/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cohortsbi {

namespace {
std::atomic<int> g_max_threads{0};  // 0 = uninitialized
thread_local bool t_inside_parallel = false;

int hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}
}  // namespace

int max_threads() {
  int n = g_max_threads.load(std::memory_order_relaxed);
  return n > 0 ? n : hardware_threads();
}

void set_max_threads(int n) {
  g_max_threads.store(n > 0 ? n : 0, std::memory_order_relaxed);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const int workers =
      t_inside_parallel ? 1
                        : static_cast<int>(std::min<std::size_t>(
                              static_cast<std::size_t>(max_threads()), n));
  if (workers <= 1) {
    bool prev = t_inside_parallel;
    t_inside_parallel = true;
    for (std::size_t i = 0; i < n; ++i) fn(i);
    t_inside_parallel = prev;
    return;
  }

  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto run_range = [&](std::size_t begin, std::size_t end) {
    t_inside_parallel = true;
    try {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    } catch (...) {
      std::lock_guard lock(err_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) {
    std::size_t begin = chunk * w;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back(run_range, begin, end);
  }
  {
    bool prev = t_inside_parallel;
    run_range(0, std::min(n, chunk));
    t_inside_parallel = prev;
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace cohortsbi
