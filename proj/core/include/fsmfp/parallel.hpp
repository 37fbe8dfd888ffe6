#pragma once

#include <cstddef>
#include <functional>

namespace fsmfp {

/// Runs fn(begin, end) over contiguous index chunks on up to
/// hardware_concurrency threads. Chunks are disjoint, so workers may write to
/// disjoint output rows without synchronization. fn must not throw.
void parallel_chunks(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace fsmfp
