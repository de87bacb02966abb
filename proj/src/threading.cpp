#include "mgtwr/threading.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <thread>
#include <vector>

namespace mgtwr {

namespace {
std::atomic<std::size_t> g_workers{0};

std::size_t hardware_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<std::size_t>(n);
}
}  // namespace

void set_worker_count(std::size_t workers) { g_workers.store(workers); }

std::size_t worker_count() {
  const std::size_t w = g_workers.load();
  return w == 0 ? hardware_workers() : w;
}

namespace {
thread_local bool t_inside_parallel = false;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::min(worker_count(), n);
  // Nested regions run inline; below a small size thread spawn costs more
  // than it saves.
  if (workers == 1 || n < 64 || t_inside_parallel) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  struct WorkerError {
    std::size_t index = std::numeric_limits<std::size_t>::max();
    std::exception_ptr error;
  };
  std::vector<WorkerError> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    const std::size_t lo = n * t / workers;
    const std::size_t hi = n * (t + 1) / workers;
    pool.emplace_back([&, t, lo, hi] {
      t_inside_parallel = true;
      for (std::size_t i = lo; i < hi; ++i) {
        try {
          fn(i);
        } catch (...) {
          errors[t] = {i, std::current_exception()};
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();

  // Rethrow the error with the smallest index so failures are deterministic.
  const WorkerError* first = nullptr;
  for (const auto& e : errors)
    if (e.error && (!first || e.index < first->index)) first = &e;
  if (first) std::rethrow_exception(first->error);
}

}  // namespace mgtwr
