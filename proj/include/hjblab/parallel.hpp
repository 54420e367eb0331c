#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace hjblab {

/// Worker count used by node- and path-parallel loops (default 1).
void set_thread_count(unsigned count);
unsigned thread_count();

/**
 * Splits [0, count) into contiguous blocks and runs fn(begin, end) on each.
 * Blocks are fixed by `count` and the thread count only, and callers write
 * disjoint outputs, so results do not depend on scheduling.
 */
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn)
{
    const std::size_t workers = std::min<std::size_t>(thread_count(), count);
    if (workers <= 1) {
        if (count > 0)
            fn(std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t block = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * block;
        const std::size_t end = std::min(count, begin + block);
        if (begin >= end)
            break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool)
        t.join();
}

/// Pairwise (cascade) summation; the order depends only on the input length.
double pairwise_sum(const double* values, std::size_t count);

}  // namespace hjblab
