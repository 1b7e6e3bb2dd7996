#include "perron.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fpt/errors.hpp"

namespace fpt::detail {

PerronResult perron_left(
    std::size_t n,
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply,
    double rq_tol, std::size_t max_iter) {
    std::vector<double> x(n, 1.0 / static_cast<double>(n)), y(n);
    double kappa_prev = std::numeric_limits<double>::quiet_NaN();
    // Residual floor: power iteration on an n-state kernel bottoms out at a
    // few n·eps of rounding noise per sweep.
    const double floor =
        std::numeric_limits<double>::epsilon() * std::max<double>(64.0, 4.0 * static_cast<double>(n));

    for (std::size_t it = 1; it <= max_iter; ++it) {
        apply(x, y);
        double kappa = 0.0;
        for (const double v : y) kappa += v;
        double residual = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            residual = std::max(residual, std::abs(y[i] - kappa * x[i]));

        const bool rq_settled =
            std::isfinite(kappa_prev) &&
            std::abs(kappa - kappa_prev) < rq_tol * std::max(1.0, std::abs(kappa));
        if (rq_settled && residual <= floor * std::max(1.0, std::abs(kappa)))
            return {std::move(x), kappa, it, residual};

        if (kappa <= 0.0)
            throw ConvergenceError("power iteration collapsed: growth factor " +
                                   std::to_string(kappa));
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / kappa;
        kappa_prev = kappa;

        if (it == max_iter)
            throw ConvergenceError("power iteration did not converge in " +
                                   std::to_string(max_iter) + " sweeps; last value " +
                                   std::to_string(kappa) + ", residual " +
                                   std::to_string(residual));
    }
    throw ConvergenceError("power iteration was given zero sweeps");
}

}  // namespace fpt::detail
