#include "fpt/branching.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "fpt/defaults.hpp"
#include "fpt/errors.hpp"
#include "fpt/rng.hpp"
#include "parallel.hpp"

namespace fpt {

BirthDeathSpec BirthDeathSpec::create(double lambda, double nu) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda) || !(nu > 0.0) || !std::isfinite(nu))
        throw ValidationError("birth-death rates must be finite with nu > 0 and lambda >= 0");
    if (lambda == nu)
        throw ValidationError("critical case lambda = nu is unsupported (rho = 0: no QSD, "
                              "and the closed forms degenerate)");
    if (lambda > nu)
        throw ValidationError("supercritical case lambda > nu is unsupported");
    return {lambda, nu};
}

double bd_extinction_prob(const BirthDeathSpec& spec, double t) {
    if (t < 0.0) throw ValidationError("time must be nonnegative");
    // q_t = nu(1 - E) / (nu - lambda·E) with E = e^{-(nu-lambda)t}; E
    // underflows to 0 for large t, giving exactly 1.
    const double e = std::exp(-spec.rho() * t);
    return spec.nu * (1.0 - e) / (spec.nu - spec.lambda * e);
}

double bd_q_inverse(const BirthDeathSpec& spec, double u) {
    if (!(u >= 0.0) || !(u < 1.0))
        throw ValidationError("extinction probability must lie in [0, 1); u = 1 means "
                              "infinite time");
    return std::log((spec.nu - spec.lambda * u) / (spec.nu * (1.0 - u))) / spec.rho();
}

double bd_mu_alpha_gf(const BirthDeathSpec& spec, double alpha, double t) {
    if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
    if (!(t >= 0.0) || !(t < 1.0))
        throw ValidationError("generating function argument must lie in [0, 1)");
    const double ratio = (spec.nu - spec.lambda * t) / (spec.nu * (1.0 - t));
    return 1.0 - std::pow(ratio, -alpha / spec.rho());
}

BdCoeffs bd_mu_alpha_coeffs(const BirthDeathSpec& spec, double alpha, std::size_t kmax) {
    if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
    if (kmax < 1) throw ValidationError("kmax must be at least 1");

    // G(t) = 1 - exp(A(t)) with A(t) = -β·ln R(t), R(t) = (nu-λt)/(nu(1-t))
    // and ln R(t) = Σ_k (1 - (λ/nu)^k)/k · t^k. The series exp recurrence
    // E_n = (1/n) Σ k·a_k·E_{n-k} keeps every coefficient exact to rounding,
    // where finite differencing would have died around k ≈ 10.
    const double beta = alpha / spec.rho();
    const double r = spec.lambda / spec.nu;
    std::vector<double> a(kmax + 1, 0.0);
    double rk = 1.0;
    for (std::size_t k = 1; k <= kmax; ++k) {
        rk *= r;
        a[k] = -beta * (1.0 - rk) / static_cast<double>(k);
    }
    std::vector<double> e(kmax + 1, 0.0);
    e[0] = 1.0;
    for (std::size_t m = 1; m <= kmax; ++m) {
        double s = 0.0;
        for (std::size_t k = 1; k <= m; ++k) s += static_cast<double>(k) * a[k] * e[m - k];
        e[m] = s / static_cast<double>(m);
    }

    BdCoeffs out;
    out.classification = alpha <= spec.rho() * (1.0 + 1e-12) ? BdClassification::qsd
                                                             : BdClassification::exponential_only;
    out.coeffs.resize(kmax);
    for (std::size_t k = 1; k <= kmax; ++k) {
        out.coeffs[k - 1] = -e[k];
        if (out.classification == BdClassification::qsd) {
            if (out.coeffs[k - 1] < -1e-12)
                throw std::logic_error("QSD coefficient " + std::to_string(k) +
                                       " came out negative: series composition bug");
            // deep coefficients underflow into rounding noise; clip within slack
            if (out.coeffs[k - 1] < 0.0) out.coeffs[k - 1] = 0.0;
        }
    }
    return out;
}

Generator truncated_bd_chain(const BirthDeathSpec& spec, std::size_t levels) {
    if (levels < 1) throw ValidationError("truncation needs at least one live level");
    std::vector<std::string> states;
    states.reserve(levels + 1);
    for (std::size_t k = 0; k <= levels; ++k) states.push_back(std::to_string(k));
    std::vector<RateTriple> rates;
    for (std::size_t k = 1; k <= levels; ++k) {
        const double kd = static_cast<double>(k);
        rates.push_back({states[k], states[k - 1], kd * spec.nu});
        if (k < levels && spec.lambda > 0.0)
            rates.push_back({states[k], states[k + 1], kd * spec.lambda});
    }
    return Generator::create(std::move(states), {"0"}, rates);
}

TwoTypeSpec TwoTypeSpec::create(std::vector<Offspring> offspring, double branch_rate) {
    if (offspring.empty()) throw ValidationError("offspring distribution is empty");
    if (!(branch_rate > 0.0) || !std::isfinite(branch_rate))
        throw ValidationError("branch rate must be positive and finite");
    double total = 0.0;
    for (const auto& o : offspring) {
        if (!(o.p >= 0.0) || !std::isfinite(o.p))
            throw ValidationError("offspring probability is negative or not finite");
        if (o.k1 == 0 && o.k2 == 0 && o.p > 0.0)
            throw ValidationError("empty offspring (0,0) must have probability zero");
        total += o.p;
    }
    if (std::abs(total - 1.0) > defaults::distribution_tol)
        throw ValidationError("offspring probabilities sum to " + std::to_string(total));
    return {std::move(offspring), branch_rate};
}

MultitypeGf multitype_mu_alpha_gf(const TwoTypeSpec& spec, double alpha, const TimeGrid& grid,
                                  std::size_t n, std::uint64_t seed, const SimOptions& opt) {
    if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
    if (n < 1000) throw ValidationError("generating-function tabulation needs n >= 1000");

    std::vector<double> emergence(n, 0.0);
    std::atomic<std::size_t> censored{0};

    // Until type 2 emerges the population is pure type 1, so only its count
    // matters: total event rate k·branch_rate, and each event either births
    // a type-2 child (emergence) or resizes the type-1 pool.
    const auto run = [&](std::size_t k) {
        RngStream rng(seed, k);
        double population = 1.0;
        double t = 0.0;
        for (std::uint64_t events = 0;; ++events) {
            if (population > static_cast<double>(defaults::max_population) ||
                events >= opt.max_events) {
                censored.fetch_add(1);
                return;
            }
            t += rng.exponential(population * spec.branch_rate);
            const double u = rng.uniform();
            double acc = 0.0;
            const TwoTypeSpec::Offspring* chosen = &spec.offspring.back();
            for (const auto& o : spec.offspring) {
                acc += o.p;
                if (u < acc) {
                    chosen = &o;
                    break;
                }
            }
            if (chosen->k2 >= 1) {
                emergence[k] = t;
                return;
            }
            population += static_cast<double>(chosen->k1) - 1.0;
        }
    };
    detail::run_indexed(n, opt.workers, run);
    if (censored.load() > 0)
        throw CensoringError(std::to_string(censored.load()) + " of " + std::to_string(n) +
                                 " trajectories hit the population or event cap before emergence",
                             censored.load());

    std::vector<double> sorted = emergence;
    std::sort(sorted.begin(), sorted.end());

    MultitypeGf out;
    out.grid.assign(grid.times().begin(), grid.times().end());
    out.q_hat.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), out.grid[g]);
        out.q_hat[g] =
            static_cast<double>(sorted.end() - it) / static_cast<double>(n);
    }
    // The common-sample estimate is already nonincreasing; the rearrangement
    // guards the contract if the estimator ever changes.
    for (std::size_t g = 1; g < out.q_hat.size(); ++g)
        out.q_hat[g] = std::min(out.q_hat[g], out.q_hat[g - 1]);

    out.table.reserve(grid.size());
    for (std::size_t g = grid.size(); g-- > 0;)
        out.table.emplace_back(out.q_hat[g], std::exp(-alpha * out.grid[g]));
    return out;
}

}  // namespace fpt
