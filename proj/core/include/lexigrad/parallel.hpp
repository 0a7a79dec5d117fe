#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace lexigrad {

// Runs fn(i) for i in [0, n). Tasks must be independent and write only to
// their own slots; the strided assignment makes results independent of the
// worker count.
template <typename Fn>
void parallel_for(std::int64_t n, int workers, Fn&& fn) {
    if (n <= 0) return;
    const int threads = std::min<std::int64_t>(std::max(workers, 1), n);
    if (threads == 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([t, threads, n, &fn] {
            for (std::int64_t i = t; i < n; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace lexigrad
