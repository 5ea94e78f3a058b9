#pragma once

#include <cstddef>
#include <functional>

namespace ipsim {

/// Worker count: IPSIM_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) across up to `workers` threads (0 means
/// worker_count()). Each index runs exactly once; callers write results into
/// per-index slots so the outcome does not depend on scheduling. The first
/// exception thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t workers = 0);

} // namespace ipsim
