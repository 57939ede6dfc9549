#pragma once

#include <cstddef>
#include <functional>

namespace ttrf {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work items are
/// claimed dynamically; callers keep results per item so the outcome does not
/// depend on which worker ran what. threads <= 1 runs inline.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

/// Default worker count (hardware concurrency, at least 1).
int default_threads();

}  // namespace ttrf
