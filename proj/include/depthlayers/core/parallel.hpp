#pragma once

#include <cstddef>
#include <functional>

namespace depthlayers {

/// Calls fn(i) for i in [0, n) on up to `workers` threads. Work is split into
/// contiguous chunks; callers write results by index, so the outcome does not
/// depend on the worker count. If any call throws, one of the exceptions is
/// rethrown once all workers have stopped.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Worker count to use when the caller passes 0.
int default_workers();

}  // namespace depthlayers
