#pragma once

#include <cstddef>
#include <functional>

namespace mgtwr {

/// Bounds parallelism in every module. 0 restores the hardware default.
void set_worker_count(std::size_t workers);
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads with a static
/// contiguous partition. Each index must write only its own output slot, so
/// results are identical to sequential execution. If workers throw, the
/// exception belonging to the smallest index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mgtwr
