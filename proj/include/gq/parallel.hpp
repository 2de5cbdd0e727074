#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gq {

/// Worker count used when the caller passes 0.
inline unsigned default_jobs() noexcept { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs fn(i, worker) for i in [0, n) on up to `jobs` threads (the caller's
/// thread is worker 0). Indices are handed out dynamically, so fn must only
/// write state owned by index i or by its worker slot. The first exception
/// thrown is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
    if (jobs == 0) jobs = default_jobs();
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i, 0u);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&](unsigned worker) {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                fn(i, worker);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::jthread> threads;
    threads.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) threads.emplace_back(body, w);
    body(0);
    threads.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace gq
