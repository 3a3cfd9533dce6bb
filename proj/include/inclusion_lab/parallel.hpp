#pragma once

#include <cstddef>
#include <functional>

namespace inclusion_lab {

/// Worker count from INCLUSION_LAB_THREADS (unset or 0 = hardware concurrency).
unsigned configured_threads();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = configured).
/// The first exception by index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads = 0);

} // namespace inclusion_lab
