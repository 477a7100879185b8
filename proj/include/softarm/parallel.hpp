#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace softarm {

inline int default_thread_count() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Static-chunk parallel for over [begin, end). The body must be safe to run
// concurrently for disjoint indices; outputs must depend only on the index so
// results do not depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn, int threads = 0) {
    if (threads <= 0) threads = default_thread_count();
    const std::size_t n = end > begin ? end - begin : 0;
    if (n == 0) return;
    const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (nt <= 1) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    const std::size_t chunk = (n + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
        const std::size_t lo = begin + t * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

// Same, but the body also receives the chunk slot index (0..threads-1), for
// callers that keep one scratch buffer per slot.
template <typename Fn>
void parallel_for_slotted(std::size_t begin, std::size_t end, int threads, Fn&& fn) {
    if (threads <= 0) threads = default_thread_count();
    const std::size_t n = end > begin ? end - begin : 0;
    if (n == 0) return;
    const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (nt <= 1) {
        for (std::size_t i = begin; i < end; ++i) fn(0, i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    const std::size_t chunk = (n + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
        const std::size_t lo = begin + t * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([t, lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(t, i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace softarm
