#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace junction_hjb {

/// Worker count from JUNCTION_HJB_THREADS (unset or 0 = hardware concurrency).
inline unsigned threads_from_env() {
  unsigned n = 0;
  if (const char* env = std::getenv("JUNCTION_HJB_THREADS")) {
    try {
      n = static_cast<unsigned>(std::stoul(env));
    } catch (...) {
      n = 0;
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Calls fn(begin, end) over a partition of [0, count). Runs inline for one
/// worker or small ranges; writes from different chunks must be disjoint.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn, std::size_t min_chunk = 4096) {
  const std::size_t chunks = std::min<std::size_t>(workers, std::max<std::size_t>(1, count / min_chunk));
  if (chunks <= 1) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(chunks - 1);
  const std::size_t step = (count + chunks - 1) / chunks;
  for (std::size_t c = 1; c < chunks; ++c) {
    const std::size_t b = c * step;
    const std::size_t e = std::min(count, b + step);
    if (b < e) pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(std::size_t{0}, std::min(count, step));
  for (auto& t : pool) t.join();
}

}  // namespace junction_hjb
