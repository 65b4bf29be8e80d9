#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace fairflow {

/// Runs fn(i) for i in [0, count) across worker threads. Callers write to
/// disjoint slots, so results are deterministic regardless of scheduling.
template <typename Fn>
void parallel_for(size_t count, Fn&& fn, unsigned max_threads = 0) {
    unsigned workers = max_threads ? max_threads : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
    if (workers <= 1 || count <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const size_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const size_t begin = w * chunk;
        const size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([begin, end, &fn] {
            for (size_t i = begin; i < end; ++i) fn(i);
        });
    }
    for (std::thread& t : pool) t.join();
}

}  // namespace fairflow
