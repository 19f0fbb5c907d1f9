#pragma once
#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace grpnet {
namespace util {

/// Thread cap for read-only fan-out work, from GROUPLASSO_THREADS (default 1).
inline std::size_t env_threads()
{
    const char* s = std::getenv("GROUPLASSO_THREADS");
    if (!s || !*s) return 1;
    try {
        const long v = std::stol(s);
        return v >= 1 ? static_cast<std::size_t>(v) : 1;
    } catch (...) {
        return 1;
    }
}

/**
 * Calls f(begin, end) on n_threads contiguous chunks of [0, n).
 * Runs inline when n_threads <= 1 or n is small.
 */
template <class F>
void parallel_chunks(std::size_t n, std::size_t n_threads, F&& f)
{
    n_threads = std::min(n_threads, n);
    if (n_threads <= 1) {
        if (n) f(std::size_t(0), n);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    const std::size_t chunk = (n + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        workers.emplace_back([&f, b, e]() { f(b, e); });
    }
    for (auto& w : workers) w.join();
}

} // namespace util
} // namespace grpnet
