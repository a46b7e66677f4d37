#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace proxyhedge {

/// Runs fn(begin, end) over contiguous chunks of [0, count) on up to `threads` workers.
/// Chunks are disjoint, so any per-item computation is independent of the split.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        fn(std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(count, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    fn(std::size_t{0}, std::min(count, chunk));
    for (auto& t : pool) t.join();
}

} // namespace proxyhedge
