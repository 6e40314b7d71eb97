// SPDX-License-Identifier: Apache-2.0
//
// Minimal deterministic work-sharing loop. Items write to their own
// output slots; any reduction happens afterwards in index order, so the
// result is independent of the worker count.

#ifndef SISFORGE_PARALLEL_HPP
#define SISFORGE_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sisforge {

// Resolve a requested worker count against hardware and the
// SIS_FORGE_THREADS cap. requested <= 0 means "use the hardware".
inline int effective_workers(int requested) {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0)
        hw = 1;
    int n = requested > 0 ? requested : hw;
    if (const char *cap = std::getenv("SIS_FORGE_THREADS")) {
        const int c = std::atoi(cap);
        if (c > 0 && c < n)
            n = c;
    }
    return n < 1 ? 1 : n;
}

// Run fn(i) for i in [0, n). Exceptions are rethrown on the caller
// thread (first one wins).
inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t)> &fn) {
    workers = effective_workers(workers);
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load(std::memory_order_relaxed))
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    const int spawn = workers > static_cast<int>(n) ? static_cast<int>(n) : workers;
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int t = 0; t < spawn; ++t)
        pool.emplace_back(worker);
    for (auto &th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace sisforge

#endif
