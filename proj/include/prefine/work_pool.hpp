#pragma once

#include <cstddef>
#include <functional>

namespace prefine {

/// Worker count: PREFINE_THREADS when set to a positive integer, otherwise the hardware
/// concurrency (at least 1).
unsigned worker_limit();

/// Runs body(0) ... body(count - 1) on up to worker_limit() threads. Items are claimed in
/// index order; the first exception thrown by any item is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace prefine
