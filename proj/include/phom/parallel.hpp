#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace phom {

namespace detail {
inline std::atomic<int>& thread_count_slot() {
  static std::atomic<int> count{0};
  return count;
}
}  // namespace detail

/// Worker count used by kernel-level loops. 0 means "not set": falls back to
/// PH_THREADS, then to hardware concurrency.
inline void set_thread_count(int n) { detail::thread_count_slot().store(std::max(0, n)); }

inline int thread_count() {
  int n = detail::thread_count_slot().load();
  if (n > 0) return n;
  if (const char* env = std::getenv("PH_THREADS")) {
    try {
      int e = std::stoi(env);
      if (e > 0) return e;
    } catch (...) {
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [begin, end) over statically sized chunks. Each index is
/// visited by exactly one worker, so element-wise kernels produce the same bits
/// for any worker count. Reductions must not be done through this helper.
template <class Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn) {
  constexpr std::size_t kMinChunk = 1u << 14;
  const std::size_t n = end > begin ? end - begin : 0;
  const int workers = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), (n + kMinChunk - 1) / kMinChunk));
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (std::size_t i = begin; i < std::min(end, begin + chunk); ++i) fn(i);
  for (auto& t : pool) t.join();
}

}  // namespace phom
