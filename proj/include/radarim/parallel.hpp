#pragma once

// Fork-join helper for the few places worth threading (conv tasks, batch
// evaluation). Work is split into contiguous static ranges so results never
// depend on the worker count; every task writes disjoint output.

#include <cstddef>
#include <functional>

namespace radarim {

// Worker cap: RADARIM_THREADS when set (>=1), else hardware concurrency.
std::size_t worker_count();

// Calls fn(i) for i in [0, n). Runs inline when n or the worker cap is 1.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace radarim
