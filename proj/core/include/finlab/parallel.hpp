#pragma once

#include <cstddef>
#include <functional>

namespace finlab {

/// Worker count: FINLAB_THREADS if set, else the hardware concurrency.
std::size_t worker_count();

/// Calls body(i) for i in [0, count) on a pool of worker threads. Each
/// index is handled exactly once; callers write results into slot i, so
/// the outcome does not depend on scheduling. The first exception thrown
/// by any call is rethrown after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace finlab
