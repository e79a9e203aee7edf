#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace symfield {

/// Runs body(i) for i in [begin, end) on up to `threads` workers in contiguous chunks.
/// Each index must write only its own outputs, so results do not depend on the schedule.
template <class Body>
void parallel_for(long begin, long end, int threads, Body&& body) {
  const long count = end - begin;
  if (count <= 0) return;
  const long workers = std::clamp<long>(threads, 1, count);
  if (workers == 1) {
    for (long i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const long chunk = (count + workers - 1) / workers;
  for (long w = 0; w < workers; ++w) {
    const long lo = begin + w * chunk;
    const long hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (long i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace symfield
