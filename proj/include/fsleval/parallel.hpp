#pragma once

#include <cstddef>
#include <functional>

namespace fsleval {

// Global worker cap for parallel_for (CLI --workers). 0 or negative restores
// the hardware default. The cap only controls scheduling; outputs must be
// written per-index so results never depend on it.
void set_worker_cap(int cap);
int worker_cap();

// Runs fn(0..count-1), possibly on several threads. Exceptions from fn are
// rethrown on the calling thread (first one wins).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace fsleval
