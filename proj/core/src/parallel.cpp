#include "nlgrad/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nlgrad {

namespace {

std::atomic<int> g_threads{1};
thread_local int t_override = 0;

}  // namespace

int thread_count() { return t_override > 0 ? t_override : g_threads.load(); }

void set_thread_count(int threads) { g_threads.store(std::max(1, threads)); }

ScopedThreadCount::ScopedThreadCount(int threads) : previous_(t_override) { t_override = std::max(1, threads); }

ScopedThreadCount::~ScopedThreadCount() { t_override = previous_; }

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), count);
  if (workers <= 1) {
    if (count > 0) body(0, count);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      ScopedThreadCount single(1);
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace nlgrad
