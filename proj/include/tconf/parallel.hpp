#pragma once

#include <cstddef>
#include <functional>

namespace tconf {

// Run fn(0..count-1) across `workers` threads pulling indices from a shared
// counter. Callers must make fn(i) independent of scheduling; the first
// exception thrown by any worker is rethrown after all threads join.
void parallel_for_index(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace tconf
