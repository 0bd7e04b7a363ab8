#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace antires {

// When worker threads each run their own factorizations, a threaded BLAS
// underneath oversubscribes the cores. Must run before the first BLAS call;
// an externally exported value wins.
inline void limit_blas_threads_for_parallel(int threads) {
#ifndef _WIN32
    if (threads > 1) setenv("OPENBLAS_NUM_THREADS", "1", 0);
#else
    (void)threads;
#endif
}

// Runs f(i) for i in [0, n) on up to `threads` workers. Results must be written
// to disjoint slots by index; no ordering guarantees between iterations.
template <typename F>
void parallel_for(int n, int threads, F&& f) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    const int workers = std::min<int>(threads, n);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace antires
