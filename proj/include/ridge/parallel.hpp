#pragma once

#include <cstddef>
#include <functional>

namespace ridge {

/// Number of worker threads for internal grid sweeps: hardware concurrency
/// capped by the RIDGE_SPLIT_THREADS environment variable (when set) and by
/// the amount of work available.
std::size_t worker_count(std::size_t items);

/// Runs fn(begin, end) over a partition of [0, n). Chunks are contiguous and
/// ordered; results must be combined order-independently by the caller
/// (all uses here are max-reductions, which are exact).
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace ridge
