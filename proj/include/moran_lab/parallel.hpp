#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "moran_lab/random.hpp"

namespace moran {

/// Samples per block. Block b of a run seeded with s draws from
/// derive_seed(s, {b}), so results never depend on the worker count.
inline constexpr std::size_t kBlockSize = std::size_t{1} << 14;

/// Worker count: MORAN_LAB_WORKERS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("MORAN_LAB_WORKERS")) {
        try {
            int v = std::stoi(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(stream, block_index, begin, count) for every block of [0, n).
/// Blocks run concurrently; fn must write only to block-owned slots.
template <class Fn>
void for_each_block(std::uint64_t seed, std::size_t n, Fn&& fn) {
    const std::size_t n_blocks = (n + kBlockSize - 1) / kBlockSize;
    auto run_block = [&](std::size_t b) {
        RandomStream stream(derive_seed(seed, {b}));
        const std::size_t begin = b * kBlockSize;
        fn(stream, b, begin, std::min(kBlockSize, n - begin));
    };

    const unsigned workers = std::min<std::size_t>(worker_count(), n_blocks);
    if (workers <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t b = next++; b < n_blocks; b = next++) {
                try {
                    run_block(b);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n_blocks;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

/// Sum of fn(stream, index) over [0, n), reduced in block order.
template <class Fn>
double parallel_sum(std::uint64_t seed, std::size_t n, Fn&& fn) {
    std::vector<double> partial((n + kBlockSize - 1) / kBlockSize, 0.0);
    for_each_block(seed, n, [&](RandomStream& stream, std::size_t b, std::size_t begin, std::size_t count) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) s += fn(stream, begin + i);
        partial[b] = s;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

} // namespace moran
