#pragma once

#include <cstddef>
#include <functional>

namespace nonxcrc {

/// Number of worker threads OpenMP would use; 1 when built without OpenMP.
int hardware_jobs();

/// Run fn(0..count-1). jobs <= 1 takes the plain serial loop, which is the
/// reference implementation the tests compare against; jobs > 1 dispatches
/// an OpenMP parallel-for with that thread count. Results must be written
/// to preassigned slots so the output is identical either way. The first
/// exception thrown by any iteration is rethrown on the calling thread.
void parallel_for_index(std::size_t count, int jobs,
                        const std::function<void(std::size_t)>& fn);

}  // namespace nonxcrc
