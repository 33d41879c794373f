#pragma once

#include <cstddef>
#include <functional>

namespace tdarep {

// Worker count: TDA_REPLICATE_THREADS if set and positive, otherwise
// std::thread::hardware_concurrency() (at least 1).
std::size_t thread_budget();

// Runs body(i) for i in [0, count). Each index is handled by exactly one
// worker; callers write results into per-index slots so the outcome does not
// depend on the number of threads. The first exception thrown is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t max_threads = 0);

}  // namespace tdarep
