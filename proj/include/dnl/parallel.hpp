#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace dnl {

// Runs body(i) for i in [0, n) on `workers` threads, sharded by index stride.
// Bodies must only write state owned by index i; merge order is then
// deterministic regardless of the worker count.
inline void parallel_for(long n, int workers, const std::function<void(long)>& body) {
    if (n <= 0) return;
    int w = std::max(1, workers);
    w = int(std::min<long>(w, n));
    if (w == 1) {
        for (long i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (int t = 0; t < w; ++t) {
        pool.emplace_back([=, &body]() {
            for (long i = t; i < n; i += w) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace dnl
