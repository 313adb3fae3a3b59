#pragma once

#include <cstddef>
#include <functional>

namespace gcl {

/// Worker count used by parallel_for; 0 selects hardware concurrency.
void set_worker_count(unsigned workers);
unsigned worker_count();

/// Calls body(i) for i in [0, n) across worker threads in contiguous blocks. Each index must
/// only write its own output slot; callers reduce afterwards in index order so results are
/// independent of the thread count. The first exception thrown by a worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace gcl
