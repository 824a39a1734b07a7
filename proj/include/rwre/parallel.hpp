#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace rwre {

/// Runs f(i) for i in [0, count) on `workers` threads. Work items must write
/// only to their own slots. If any item throws, the exception of the lowest
/// failing index is rethrown, so failures do not depend on scheduling.
template <class F>
void parallel_for(std::size_t count, unsigned workers, F&& f) {
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> first_failure{count};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::size_t> error_index(workers, count);
  auto body = [&](unsigned w) {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count || i > first_failure.load(std::memory_order_relaxed)) return;
      try {
        f(i);
      } catch (...) {
        if (i < error_index[w]) {
          error_index[w] = i;
          errors[w] = std::current_exception();
        }
        std::size_t seen = first_failure.load();
        while (i < seen && !first_failure.compare_exchange_weak(seen, i)) {
        }
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body, w);
  }
  std::size_t best = count;
  std::exception_ptr err;
  for (unsigned w = 0; w < workers; ++w) {
    if (errors[w] && error_index[w] < best) {
      best = error_index[w];
      err = errors[w];
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace rwre
