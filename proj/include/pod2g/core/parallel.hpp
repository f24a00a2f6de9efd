#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include "pod2g/core/types.hpp"

namespace pod2g {

/// Dispatch fn(0..n-1) over a pool of `jobs` threads. Results must be written
/// to preallocated, index-owned slots so the outcome is independent of the
/// scheduling order. The first exception wins and is rethrown on the caller.
inline void parallel_for(index_t n, index_t jobs, const std::function<void(index_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (index_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<index_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (true) {
            const index_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const index_t nthreads = std::min<index_t>(jobs, n);
    pool.reserve(nthreads);
    for (index_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace pod2g
