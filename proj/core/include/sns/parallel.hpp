#pragma once

#include <functional>

namespace sns {

/// Resolves a requested worker count: 0 means all available hardware
/// threads, anything else is clamped to >= 1.
int resolve_workers(int requested);

/// Runs fn(0..n-1) across `workers` threads. Work items are claimed from a
/// shared counter; callers must write results into per-index slots so the
/// outcome does not depend on the schedule. The first exception thrown by
/// any item is rethrown after all threads join.
void parallel_for_index(int n, int workers, const std::function<void(int)>& fn);

}  // namespace sns
