#pragma once

#include <cstddef>
#include <functional>

namespace dwave {

/// Hardware concurrency, capped by DWAVE_NUM_THREADS when set.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on the worker pool. Results must be
/// written to per-index slots so output order never depends on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace dwave
