#pragma once

#include <omp.h>

#include <cstdint>
#include <utility>
#include <vector>

namespace etlq {

/// Resolve a worker-count request: 0 means "all hardware threads".
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  int n = omp_get_max_threads();
  return n > 0 ? n : 1;
}

/// Split [0, total) into at most `workers` contiguous chunks and run
/// fn(chunk_index, begin, end) for each, in parallel.
///
/// Callers that need worker-count-invariant results must make their chunk
/// merge associative and partition-independent (integer sums, total-order
/// minima); the chunk boundaries themselves depend on `workers`.
template <class Fn>
void parallel_chunks(std::uint64_t total, int workers, Fn&& fn) {
  workers = resolve_workers(workers);
  if (total == 0) return;
  const std::uint64_t w = static_cast<std::uint64_t>(workers) < total
                              ? static_cast<std::uint64_t>(workers)
                              : total;
  const std::uint64_t base = total / w;
  const std::uint64_t rem = total % w;
  if (w == 1) {
    fn(0, std::uint64_t{0}, total);
    return;
  }
#pragma omp parallel for num_threads(static_cast<int>(w)) schedule(static, 1)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(w); ++c) {
    const std::uint64_t uc = static_cast<std::uint64_t>(c);
    const std::uint64_t begin = uc * base + (uc < rem ? uc : rem);
    const std::uint64_t end = begin + base + (uc < rem ? 1 : 0);
    fn(static_cast<int>(c), begin, end);
  }
}

}  // namespace etlq
