#pragma once

#include <cstddef>
#include <functional>

namespace cohortsbi {

// Process-wide cap on worker threads (CLI --threads). Defaults to the
// hardware concurrency.
int max_threads();
void set_max_threads(int n);

// Runs fn(i) for every i in [0, n). The index range is split into contiguous
// chunks; each index owns its output slot, so results are identical for any
// worker count. Nested calls run serially in the calling worker.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace cohortsbi
