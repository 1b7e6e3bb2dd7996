#include "fpt/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "fpt/errors.hpp"
#include "fpt/rng.hpp"
#include "parallel.hpp"

namespace fpt {

using detail::run_indexed;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::size_t sample_index(std::span<const double> weights, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;  // u landed in the rounding slack
}

std::size_t sample_row(const std::vector<RateEntry>& row, double total, double u) {
    double acc = 0.0;
    for (const auto& e : row) {
        acc += e.rate / total;
        if (u < acc) return e.col;
    }
    return row.back().col;
}

void fail_if_censored(const std::atomic<std::size_t>& censored, std::size_t n) {
    const std::size_t c = censored.load();
    if (c > 0)
        throw CensoringError(std::to_string(c) + " of " + std::to_string(n) +
                                 " trajectories were censored at the event cap",
                             c);
}

double ks_statistic_sorted(std::span<const double> sorted, double rate) {
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = -std::expm1(-rate * sorted[i]);
        d = std::max(d, f - static_cast<double>(i) / n);
        d = std::max(d, static_cast<double>(i + 1) / n - f);
    }
    return d;
}

// Kolmogorov tail Q(λ) = 2 Σ (-1)^{j-1} e^{-2 j² λ²}.
double kolmogorov_q(double lambda) {
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 101; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_p_value(std::size_t n, double d) {
    const double sn = std::sqrt(static_cast<double>(n));
    return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace

Envelope envelope(const KilledGenerator& kg) {
    Envelope env{inf, 0.0};
    for (std::size_t i = 0; i < kg.e_size(); ++i) {
        env.alpha0 = std::min(env.alpha0, kg.eta(i));
        env.alpha1 = std::max(env.alpha1, kg.eta(i));
    }
    if (kg.e_size() == 0) env.alpha0 = 0.0;
    return env;
}

SampleSet simulate_direct(const Generator& gen, const Distribution& mu, std::size_t n,
                          std::uint64_t seed, const SimOptions& opt) {
    if (n == 0) throw ValidationError("sample size must be at least 1");
    if (mu.e_size() != gen.e_size())
        throw ValidationError("distribution does not match the model's E space");
    if (mu.delta_mass() > 0.0)
        throw ValidationError("initial law charges the cemetery state");

    SampleSet out;
    out.values.assign(n, 0.0);
    out.seed = seed;
    out.scheme = Scheme::direct;
    std::atomic<std::size_t> censored{0};

    run_indexed(n, opt.workers, [&](std::size_t k) {
        RngStream rng(seed, k);
        std::size_t s = gen.e_indices()[sample_index(mu.e_mass(), rng.uniform())];
        double t = 0.0;
        for (std::uint64_t events = 0;; ++events) {
            if (gen.is_target(s)) {
                out.values[k] = t;
                return;
            }
            const double q = gen.exit_rate(s);
            if (q <= 0.0 || events >= opt.max_events) {
                censored.fetch_add(1);
                return;
            }
            t += rng.exponential(q);
            s = sample_row(gen.row(s), q, rng.uniform());
        }
    });
    fail_if_censored(censored, n);
    return out;
}

SampleSet simulate_two_clock(const KilledGenerator& kg, const Distribution& mu, std::size_t n,
                             std::uint64_t seed, const SimOptions& opt) {
    if (n == 0) throw ValidationError("sample size must be at least 1");
    if (mu.e_size() != kg.e_size())
        throw ValidationError("distribution does not match the killed state space");
    if (mu.delta_mass() > 0.0)
        throw ValidationError("initial law charges the cemetery state");

    // Exit rates of the D-removed chain (diagonals recompensated).
    std::vector<double> within_exit(kg.e_size());
    for (std::size_t i = 0; i < kg.e_size(); ++i)
        within_exit[i] = kg.exit_rate(i) - kg.eta(i);

    SampleSet out;
    out.values.assign(n, 0.0);
    out.seed = seed;
    out.scheme = Scheme::two_clock;
    std::atomic<std::size_t> censored{0};

    run_indexed(n, opt.workers, [&](std::size_t k) {
        RngStream rng(seed, k);
        std::size_t i = sample_index(mu.e_mass(), rng.uniform());
        double t = 0.0;
        for (std::uint64_t events = 0; events < opt.max_events; ++events) {
            const double holding = rng.exponential(within_exit[i]);
            const double clock = rng.exponential(kg.eta(i));
            if (clock <= holding && clock < inf) {
                out.values[k] = t + clock;
                return;
            }
            if (holding == inf) break;  // no move possible and the clock never rings
            t += holding;
            i = sample_row(kg.row(i), within_exit[i], rng.uniform());
        }
        censored.fetch_add(1);
    });
    fail_if_censored(censored, n);
    return out;
}

ExpTest test_exponential(const SampleSet& s, std::optional<double> alpha) {
    const std::size_t n = s.values.size();
    if (n < 100) throw ValidationError("exponentiality test needs at least 100 samples");
    double mean = 0.0;
    for (const double v : s.values) {
        if (!(v > 0.0))
            throw ValidationError("sample contains a nonpositive value");
        mean += v;
    }
    mean /= static_cast<double>(n);
    if (alpha && !(*alpha > 0.0)) throw ValidationError("alpha must be positive");

    ExpTest test;
    test.fitted = !alpha.has_value();
    test.alpha = alpha ? *alpha : 1.0 / mean;

    std::vector<double> sorted = s.values;
    std::sort(sorted.begin(), sorted.end());
    test.statistic = ks_statistic_sorted(sorted, test.alpha);

    if (!test.fitted) {
        test.p_value = ks_p_value(n, test.statistic);
    } else {
        // Parametric bootstrap: the fitted rate shrinks the null KS
        // distribution, so the analytic p-value would be badly conservative.
        constexpr std::size_t resamples = 999;
        constexpr std::uint64_t bootstrap_tag = 0xb007'0000'0000'0000ull;
        std::size_t at_least = 0;
        std::vector<double> re(n);
        for (std::size_t r = 0; r < resamples; ++r) {
            RngStream rng(s.seed, bootstrap_tag + r);
            double re_mean = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                re[k] = rng.exponential(test.alpha);
                re_mean += re[k];
            }
            re_mean /= static_cast<double>(n);
            std::sort(re.begin(), re.end());
            if (ks_statistic_sorted(re, 1.0 / re_mean) >= test.statistic) ++at_least;
        }
        test.p_value = static_cast<double>(1 + at_least) / static_cast<double>(resamples + 1);
    }
    test.exponential = test.p_value >= 0.01;
    return test;
}

KsTwoSample ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ValidationError("two-sample KS needs nonempty samples");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());

    const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
    double d = 0.0;
    std::size_t ia = 0, ib = 0;
    while (ia < sa.size() && ib < sb.size()) {
        const double x = std::min(sa[ia], sb[ib]);
        while (ia < sa.size() && sa[ia] <= x) ++ia;
        while (ib < sb.size() && sb[ib] <= x) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    const double ne = na * nb / (na + nb);
    const double sn = std::sqrt(ne);
    return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

void write_samples_csv(const SampleSet& s, std::ostream& os) {
    os << "T\n";
    char buf[32];
    for (const double v : s.values) {
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        os.write(buf, res.ptr - buf);
        os.put('\n');
    }
}

}  // namespace fpt
