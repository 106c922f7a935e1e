#pragma once

#include <cstddef>
#include <functional>

namespace homog {

/// Number of worker threads: HOMOG_THREADS if set, otherwise the override
/// installed by set_thread_count, otherwise hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks; the
/// caller is responsible for writing results to per-index slots so that the
/// outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace homog
