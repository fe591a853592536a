#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mmdtest {

// Static-chunk parallel loop. Callers write results into per-index slots and
// derive any randomness from the index, so the outcome is identical for every
// thread count (tested by the CLI determinism suite).
template <typename Fn>
void parallel_for(std::int64_t begin, std::int64_t end, int threads, Fn&& fn) {
    const std::int64_t total = end - begin;
    if (total <= 0) return;
    threads = std::max(1, threads);
    if (threads == 1 || total == 1) {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
        return;
    }
    const int workers = static_cast<int>(std::min<std::int64_t>(threads, total));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::mutex err_mutex;
    std::exception_ptr first_error;
    const std::int64_t chunk = (total + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = begin + w * chunk;
        const std::int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::int64_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::scoped_lock lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mmdtest
