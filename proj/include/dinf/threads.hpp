#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace dinf {

// Runs fn(worker, begin, end) over a contiguous block partition of [0, n).
// The partition depends only on (n, workers), never on scheduling, so any
// per-worker accumulation combined in worker order is reproducible.
template <class Fn>
void parallel_blocks(std::size_t n, int workers, Fn&& fn) {
    if (workers < 1) workers = 1;
    if (n == 0) return;
    if (workers == 1 || n == 1) {
        fn(0, std::size_t{0}, n);
        return;
    }
    if (std::size_t(workers) > n) workers = int(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        std::size_t begin = n * w / workers;
        std::size_t end = n * (w + 1) / workers;
        pool.emplace_back([&fn, w, begin, end] { fn(w, begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace dinf
