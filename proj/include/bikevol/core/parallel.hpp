#pragma once

#include <cstddef>
#include <functional>

namespace bikevol {

// Process-wide default used when callers pass workers = 0.
void set_default_workers(int workers);
int default_workers();

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Callers write results into
/// per-index slots, so output never depends on completion order. Nested calls from inside
/// a worker run inline. If any item throws, the exception of the lowest index is rethrown.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn);

}  // namespace bikevol
