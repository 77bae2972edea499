#pragma once

#include <cstddef>
#include <functional>

namespace revtrack {

/// Global worker cap. 0 means "use hardware concurrency".
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Runs body(i) for i in [0, n) across the worker pool. Each index is visited
/// exactly once; callers write results into per-index slots so output order
/// never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t min_chunk = 64);

}  // namespace revtrack
