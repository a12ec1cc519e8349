#pragma once

#include <cstddef>
#include <functional>

namespace signet {

// Number of workers used by parallel_for. Defaults to hardware_concurrency,
// override with the SIGNET_THREADS environment variable.
int worker_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
// worker; every index is processed by exactly one worker, so results are
// identical for any worker count as long as writes are disjoint per index.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunk_fn);

inline void parallel_for_each(std::size_t n, const std::function<void(std::size_t)>& fn) {
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
}

}  // namespace signet
