#pragma once

#include <cstddef>
#include <functional>

namespace oblique {

/// Worker count: hardware concurrency, capped by OBLIQUE_THREADS when set.
std::size_t worker_count();

/// Runs fn(0) .. fn(n-1) on up to `workers` threads (0 = worker_count()).
/// Results must be written by index. If any call throws, the exception of the
/// lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t workers = 0);

}  // namespace oblique
