#pragma once

#include <cstddef>
#include <functional>

namespace roadseg {

// Worker-pool size used by parallel_for. 0 means hardware concurrency.
void set_num_threads(int n);
int num_threads();

// Runs fn(i) for i in [0, count). Each index is computed exactly once and
// results must be written to per-index slots by the caller; the outcome is
// then independent of the pool size.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace roadseg
