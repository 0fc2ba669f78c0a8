#ifndef TAT_PARALLEL_HPP
#define TAT_PARALLEL_HPP

#include <functional>

namespace tat {

/// Worker count: hardware concurrency, capped by TAT_MAX_WORKERS if set.
int worker_count();

/// Runs body(lo, hi, worker) over [0, n) split into contiguous chunks, one
/// per worker, in index order. Chunk boundaries depend only on n and the
/// worker count.
void parallel_chunks(int n, const std::function<void(int lo, int hi, int worker)>& body, int workers = 0);

}  // namespace tat

#endif  // TAT_PARALLEL_HPP
