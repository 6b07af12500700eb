#pragma once

#include <cstddef>
#include <functional>

namespace ood {

/// Worker cap from OOD_HARNESS_THREADS, falling back to hardware concurrency.
std::size_t thread_limit();

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// visited exactly once; callers write results into pre-sized slots so output
/// does not depend on scheduling. The exception from the lowest failing index is rethrown.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace ood
