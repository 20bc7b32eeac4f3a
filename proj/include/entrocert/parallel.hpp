#pragma once

#include <cstddef>
#include <functional>

namespace entrocert {

/// Worker count: hardware concurrency capped by ENTROCERT_THREADS when set.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) over contiguous chunks. Each index must
/// write only its own output slot; callers reduce afterwards in index order,
/// so results do not depend on the worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace entrocert
