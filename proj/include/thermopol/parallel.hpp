#pragma once

#include <functional>

namespace thermopol {

/// Worker count: THERMOPOL_THREADS if set and positive, otherwise hardware concurrency.
int worker_count();

/// Calls fn(i) for i in [0, n), split into contiguous blocks across workers.
/// fn must only write state owned by index i.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace thermopol
