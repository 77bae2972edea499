#include "revtrack/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace revtrack {
namespace {

std::atomic<std::size_t> g_max_threads{0};
// Nested calls run inline on the calling worker.
thread_local bool t_inside_pool = false;

}  // namespace

void set_max_threads(std::size_t n) { g_max_threads.store(n); }

std::size_t max_threads() {
  const std::size_t cap = g_max_threads.load();
  if (cap > 0) return cap;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t min_chunk) {
  const std::size_t workers =
      std::min(max_threads(), (n + std::max<std::size_t>(min_chunk, 1) - 1) /
                                  std::max<std::size_t>(min_chunk, 1));
  if (workers <= 1 || t_inside_pool) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t chunk = std::max<std::size_t>(min_chunk, n / (workers * 4) + 1);
  auto run = [&] {
    const bool was_inside = t_inside_pool;
    t_inside_pool = true;
    struct Restore {
      bool value;
      ~Restore() { t_inside_pool = value; }
    } restore{was_inside};
    for (;;) {
      const std::size_t begin = next.fetch_add(chunk);
      if (begin >= n) return;
      const std::size_t end = std::min(n, begin + chunk);
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace revtrack
