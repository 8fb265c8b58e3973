#include "ddpmctl/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ddpmctl {

namespace {
std::atomic<std::size_t> g_threads{0};

std::size_t hardware_threads() {
  const auto n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}
}  // namespace

void set_thread_count(std::size_t n) { g_threads = n; }

std::size_t thread_count() {
  const auto n = g_threads.load();
  return n == 0 ? hardware_threads() : n;
}

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body) {
  if (end <= begin) return;
  const std::size_t count = end - begin;
  const std::size_t workers = std::min(thread_count(), count);
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) body(i);
    return;
  }

  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace ddpmctl
