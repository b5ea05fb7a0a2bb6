#pragma once

#include <cstddef>
#include <functional>

namespace semiflow {

/// Worker count: SEMIFLOW_LAB_THREADS if set and positive, otherwise the
/// hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Exceptions from workers are rethrown on the
/// calling thread (the first one raised wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace semiflow
