#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace btlab {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Splits [0, n) into contiguous ranges, one per worker. Workers must write
// only to their own slots so results do not depend on the worker count.
template <typename Fn>
void parallel_for(std::int64_t n, int threads, Fn&& fn) {
    threads = std::min<std::int64_t>(resolve_threads(threads), n);
    if (n <= 0) return;
    if (threads <= 1) {
        fn(std::int64_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::exception_ptr err;
    std::mutex err_mu;
    const std::int64_t chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const std::int64_t lo = w * chunk;
        const std::int64_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                fn(lo, hi);
            } catch (...) {
                std::lock_guard<std::mutex> g(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace btlab
