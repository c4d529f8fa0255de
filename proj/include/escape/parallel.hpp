#pragma once

#include <cstddef>
#include <functional>

namespace escape {

/// Worker count used when a caller passes 0: the ESCAPE_WORKERS environment
/// variable if set, otherwise the hardware concurrency.
int default_workers();

/// Runs fn(i) for i in [0, n) on `workers` threads (0 = default_workers()).
/// Each index writes only its own output slot, so results are identical for
/// any worker count. Exceptions are captured and rethrown on the caller.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace escape
