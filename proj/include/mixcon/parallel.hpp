#pragma once

#include <cstddef>
#include <functional>

namespace mixcon {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// executed exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling. threads <= 1 runs inline.
/// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

/// Hardware concurrency, at least 1.
int default_threads();

}  // namespace mixcon
