#pragma once

#include <cstddef>
#include <functional>

namespace thc {

/// Worker count: THC_THREADS if set and positive, else hardware concurrency.
unsigned thread_count();

/// Runs fn(0..n-1) on up to thread_count() threads. Each index runs exactly
/// once; if any call throws, the exception of the lowest index is rethrown
/// after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace thc
