#pragma once

#include <cstddef>
#include <functional>

namespace nlgrad {

/// Worker count used by parallel_for on the calling thread (default 1).
int thread_count();
void set_thread_count(int threads);

/// Overrides the worker count for the current thread while in scope.
class ScopedThreadCount {
 public:
  explicit ScopedThreadCount(int threads);
  ~ScopedThreadCount();
  ScopedThreadCount(const ScopedThreadCount&) = delete;
  ScopedThreadCount& operator=(const ScopedThreadCount&) = delete;

 private:
  int previous_;
};

/// Splits [0, count) into contiguous chunks, one per worker, and calls
/// body(begin, end) on each. Chunk boundaries depend only on count and the
/// worker count, so per-index work is reproducible.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace nlgrad
