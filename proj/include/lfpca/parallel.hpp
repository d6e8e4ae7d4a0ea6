#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace lfpca {

// Worker count: explicit request, else LFPCA_THREADS, else hardware concurrency.
int resolve_threads(std::optional<int> requested = std::nullopt);

// Runs task(index) for index in [0, count) on up to `threads` workers, in
// waves of `threads` consecutive indices. After each wave, combine(index) is
// called for the wave's indices in ascending order on the calling thread, so
// reductions see partial results in a fixed order regardless of the worker
// count. Exceptions thrown by a task are rethrown on the calling thread.
void ordered_parallel_for(std::size_t count, int threads,
                          const std::function<void(std::size_t)>& task,
                          const std::function<void(std::size_t)>& combine = {});

}  // namespace lfpca
