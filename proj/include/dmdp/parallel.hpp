#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dmdp {

/// Runs fn(k) for every k in [0, n). Tasks must write to disjoint caller-owned
/// slots; completion order is unspecified, so determinism comes from indexed
/// output, not scheduling. The first exception is rethrown after all workers
/// join.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn,
                         unsigned num_threads = 0) {
    if (n <= 0) return;
    unsigned workers = num_threads ? num_threads : std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    if (workers > static_cast<unsigned>(n)) workers = static_cast<unsigned>(n);
    if (workers == 1) {
        for (std::int64_t k = 0; k < n; ++k) fn(k);
        return;
    }

    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::int64_t k = next.fetch_add(1, std::memory_order_relaxed);
            if (k >= n) return;
            try {
                fn(k);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace dmdp
