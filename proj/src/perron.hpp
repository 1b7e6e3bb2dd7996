#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace fpt::detail {

struct PerronResult {
    std::vector<double> vec;    // left Perron vector, L1-normalized, nonnegative
    double value = 0.0;         // Perron eigenvalue of the kernel
    std::size_t iterations = 0;
    double residual = 0.0;      // ∞-norm of xK - value·x at exit
};

/// Left Perron pair of a nonnegative kernel by power iteration.
/// apply(x, y) computes y = xK. Iterates until successive growth-factor
/// estimates agree to rq_tol and the eigen-residual reaches the rounding
/// floor; throws ConvergenceError after max_iter sweeps.
PerronResult perron_left(
    std::size_t n,
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply,
    double rq_tol, std::size_t max_iter);

}  // namespace fpt::detail
