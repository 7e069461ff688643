#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace phyauth {

// Splits [0, total) into contiguous chunks across `jobs` threads and rethrows
// the first worker exception in the caller. Deterministic as long as each
// worker writes only to its own index range.
template <typename Fn>
void parallel_chunks(long total, int jobs, Fn&& worker) {
    if (jobs <= 1) {
        worker(0L, total);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    const long chunk = (total + jobs - 1) / jobs;
    for (int j = 0; j < jobs; ++j) {
        const long b = static_cast<long>(j) * chunk;
        const long e = std::min(total, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&worker, &errors, j, b, e] {
            try {
                worker(b, e);
            } catch (...) {
                errors[static_cast<std::size_t>(j)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
}

} // namespace phyauth
