#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace cfeval {

// Runs fn(i) for i in [0, n) on up to max_parallel worker threads.
// fn must be thread-safe; callers collect results by index.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t max_parallel, Fn&& fn) {
    if (n == 0) return;
    std::size_t workers = std::min(max_parallel == 0 ? 1 : max_parallel, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace cfeval
