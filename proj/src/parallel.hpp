#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fpt::detail {

/// Runs body(k) for k in [0, n) across the requested workers. Bodies must be
/// independent per index; any partitioning then reproduces the serial run.
inline void run_indexed(std::size_t n, unsigned workers,
                        const std::function<void(std::size_t)>& body) {
    workers = std::max(1u, workers);
    if (workers == 1 || n < 2) {
        for (std::size_t k = 0; k < n; ++k) body(k);
        return;
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t lo = n * w / workers;
            const std::size_t hi = n * (w + 1) / workers;
            try {
                for (std::size_t k = lo; k < hi; ++k) body(k);
            } catch (...) {
                const std::lock_guard lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fpt::detail
