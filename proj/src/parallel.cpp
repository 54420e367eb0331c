#include "hjblab/parallel.hpp"

#include <atomic>

namespace hjblab {

namespace {
std::atomic<unsigned> g_threads{1};
}

void set_thread_count(unsigned count) { g_threads = count == 0 ? 1u : count; }

unsigned thread_count() { return g_threads; }

double pairwise_sum(const double* values, std::size_t count)
{
    if (count <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i)
            s += values[i];
        return s;
    }
    const std::size_t half = count / 2;
    return pairwise_sum(values, half) + pairwise_sum(values + half, count - half);
}

}  // namespace hjblab
