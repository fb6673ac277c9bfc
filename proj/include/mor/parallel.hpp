// SPDX-License-Identifier: Apache-2.0

#ifndef MOR_PARALLEL_HPP
#define MOR_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace mor
{

// Worker count from MOR_THREADS (0 or unset = hardware concurrency).
std::size_t thread_count();

// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
// write results into preallocated slots so output order never depends on
// scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body);

}  // namespace mor

#endif  // MOR_PARALLEL_HPP
