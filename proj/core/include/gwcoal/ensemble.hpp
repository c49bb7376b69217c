// Deterministic parallel replicate runner: RNG streams are keyed by the
// replicate index (never the worker thread), results land in index order,
// so any reduction over the returned vector is independent of thread count.
#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "gwcoal/rng.hpp"

namespace gwcoal {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// fn(replicate_index, rng) -> R, executed for indices 0..n-1.
template <class R, class F>
std::vector<R> run_replicates(std::uint64_t n, std::uint64_t seed, int threads, F&& fn) {
    std::vector<R> results(n);
    const int nthreads = std::min<std::uint64_t>(std::max(1, resolve_threads(threads)), std::max<std::uint64_t>(n, 1));
    if (nthreads <= 1) {
        for (std::uint64_t i = 0; i < n; ++i) {
            Rng rng = Rng::for_stream(seed, i);
            results[i] = fn(i, rng);
        }
        return results;
    }
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                Rng rng = Rng::for_stream(seed, i);
                results[i] = fn(i, rng);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return results;
}

}  // namespace gwcoal
