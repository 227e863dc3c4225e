#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <future>
#include <thread>
#include <vector>

namespace shlab {

namespace detail {
inline std::atomic<int>& parallelism_degree() {
  static std::atomic<int> degree{0};
  return degree;
}
}  // namespace detail

// Caps the worker count of for_each_index_parallel; 0 restores the hardware default.
inline void set_parallelism(int degree) {
  detail::parallelism_degree().store(degree < 0 ? 0 : degree);
}

inline int parallelism() { return detail::parallelism_degree().load(); }

// Runs fn(0..count-1) across up to hardware_concurrency workers (or the configured
// degree). Each index must own its outputs (distinct slots); the first worker
// exception propagates to the caller.
template <typename Fn>
void for_each_index_parallel(std::size_t count, Fn&& fn) {
  std::size_t cap = static_cast<std::size_t>(
      std::max<int>(0, detail::parallelism_degree().load()));
  if (cap == 0) {
    cap = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
  const std::size_t width = std::min(count, cap);
  if (width <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  workers.reserve(width);
  for (std::size_t w = 0; w < width; ++w) {
    workers.push_back(std::async(std::launch::async, [&]() {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        fn(i);
      }
    }));
  }
  for (auto& worker : workers) {
    worker.get();
  }
}

}  // namespace shlab
