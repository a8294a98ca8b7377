#pragma once

#include <cstddef>
#include <functional>

namespace passforge {

/// Worker count: PASSFORGE_THREADS when set (>= 1), else hardware concurrency.
int thread_count();

/// Runs f(i) for i in [0, n) on up to thread_count() threads. Callers write
/// results into per-index slots, so output never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace passforge
