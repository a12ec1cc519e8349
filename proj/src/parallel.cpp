#include "signet/parallel.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace signet {

int worker_count() {
    static int count = [] {
        if (const char* env = std::getenv("SIGNET_THREADS")) {
            int n = std::atoi(env);
            if (n >= 1) return n;
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }();
    return count;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& chunk_fn) {
    if (n == 0) return;
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
    if (workers <= 1) {
        chunk_fn(0, n);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    const std::size_t base = n / workers;
    const std::size_t extra = n % workers;
    std::size_t lo = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t len = base + (w < extra ? 1 : 0);
        const std::size_t hi = lo + len;
        threads.emplace_back([&chunk_fn, lo, hi] { chunk_fn(lo, hi); });
        lo = hi;
    }
    for (auto& t : threads) t.join();
}

}  // namespace signet
