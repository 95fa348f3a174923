#pragma once

#include <cstddef>
#include <functional>

namespace hmmrf {

/// Worker cap from HMMRF_THREADS: 0 means run inline. Unset means
/// hardware concurrency.
std::size_t worker_count();

/// Run body(i) for i in [0, n). Work is split across at most worker_count()
/// threads; each index writes only its own output slot so results do not
/// depend on scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hmmrf
