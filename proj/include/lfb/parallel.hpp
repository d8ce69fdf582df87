#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace lfb::parallel {

namespace detail {
inline std::atomic<int>& budget() {
    static std::atomic<int> n{0};  // 0 = auto (hardware concurrency)
    return n;
}
}  // namespace detail

/// Caps the number of worker threads used by parallel_for. 0 restores auto.
inline void set_max_threads(int n) { detail::budget().store(n < 0 ? 0 : n); }

inline int max_threads() {
    int n = detail::budget().load();
    if (n > 0) return n;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(begin, end) over contiguous chunks of [0, n). Each index must
/// write only its own outputs; chunking never changes per-index arithmetic,
/// so results are bit-identical for any thread count.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
    if (n <= 0) return;
    const int want = max_threads();
    const std::int64_t min_chunk = 256;
    int workers = static_cast<int>(std::min<std::int64_t>(want, (n + min_chunk - 1) / min_chunk));
    if (workers <= 1) {
        fn(std::int64_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers) - 1);
    const std::int64_t chunk = (n + workers - 1) / workers;
    for (int t = 1; t < workers; ++t) {
        std::int64_t b = t * chunk;
        std::int64_t e = std::min<std::int64_t>(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    fn(std::int64_t{0}, std::min<std::int64_t>(n, chunk));
    for (auto& th : pool) th.join();
}

}  // namespace lfb::parallel
