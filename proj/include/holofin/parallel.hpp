#ifndef HOLOFIN_PARALLEL_HPP
#define HOLOFIN_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace holofin {

// Global worker count. 1 means fully sequential execution. Set once at
// startup (CLI --threads / HOLOFIN_THREADS); defaults to the hardware
// concurrency.
int thread_count();
void set_thread_count(int n);

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
// worker. Results must be written to per-index slots so the outcome is
// independent of scheduling; any reduction happens afterwards in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace holofin

#endif
