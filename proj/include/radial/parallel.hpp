// Copyright (c) 2026 The radial-attention Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace radial {

/// Worker count: RADIAL_THREADS caps it, hardware concurrency is the default.
inline unsigned max_threads() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("RADIAL_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && static_cast<unsigned>(v) < hw) return static_cast<unsigned>(v);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return hw;
}

/// Static-chunked parallel loop over [0, count). fn(index) must only write
/// to slots owned by its index, so results are deterministic regardless of
/// the thread count. A worker exception is rethrown on the calling thread
/// once all workers have joined.
template <typename Fn>
void parallel_for(std::uint64_t count, Fn&& fn) {
    unsigned workers = max_threads();
    if (workers <= 1 || count < 2) {
        for (std::uint64_t idx = 0; idx < count; ++idx) fn(idx);
        return;
    }
    if (workers > count) workers = static_cast<unsigned>(count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::atomic_flag error_set;
    std::uint64_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::uint64_t lo = w * chunk;
        std::uint64_t hi = lo + chunk < count ? lo + chunk : count;
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn, &error, &error_set] {
            try {
                for (std::uint64_t idx = lo; idx < hi; ++idx) fn(idx);
            } catch (...) {
                if (!error_set.test_and_set()) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace radial
