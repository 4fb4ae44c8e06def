#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace loopshaper {

// Worker count for frequency-parallel loops. Defaults to 1 (serial) so runs
// are reproducible unless the user opts in via LOOPSHAPER_THREADS.
inline unsigned parallel_workers() {
    const char* env = std::getenv("LOOPSHAPER_THREADS");
    if (env == nullptr) return 1;
    long v = std::strtol(env, nullptr, 10);
    if (v < 1) return 1;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    return static_cast<unsigned>(std::min<long>(v, hw));
}

// Index-parallel for-loop. Each worker owns a contiguous slab; results must be
// written to disjoint slots so the outcome is independent of thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const unsigned workers = parallel_workers();
    if (workers <= 1 || n < 2 * workers) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned t = 0; t < workers; ++t) {
        const std::size_t lo = static_cast<std::size_t>(t) * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace loopshaper
