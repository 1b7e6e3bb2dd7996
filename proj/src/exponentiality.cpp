#include "fpt/exponentiality.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fpt/defaults.hpp"
#include "fpt/errors.hpp"
#include "perron.hpp"

namespace fpt {

namespace {

void require_charges_e_only(const KilledGenerator& kg, const Distribution& mu) {
    if (mu.e_size() != kg.e_size())
        throw ValidationError("distribution does not match the killed state space");
    if (mu.delta_mass() > 0.0)
        throw ValidationError("distribution charges the cemetery state");
}

// μQ^T as a vector over E ∪ {Δ} (Δ last).
std::vector<double> mu_qt(const KilledGenerator& kg, std::span<const double> e_mass) {
    const std::size_t n = kg.e_size();
    std::vector<double> out(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double mi = e_mass[i];
        if (mi == 0.0) continue;
        out[i] -= mi * kg.exit_rate(i);
        for (const auto& e : kg.row(i)) out[e.col] += mi * e.rate;
        out[n] += mi * kg.eta(i);
    }
    return out;
}

// The prefactor w = μQ^T + α(μ-δ) of the correction integral; w ≡ 0 exactly
// when μ is quasi-stationary.
std::vector<double> correction_vector(const KilledGenerator& kg, const Distribution& mu,
                                      double alpha) {
    std::vector<double> w = mu_qt(kg, mu.e_mass());
    for (std::size_t j = 0; j < kg.e_size(); ++j) w[j] += alpha * mu[j];
    w[kg.e_size()] += alpha * (mu.delta_mass() - 1.0);
    return w;
}

double linf(std::span<const double> v) {
    double m = 0.0;
    for (const double x : v) m = std::max(m, std::abs(x));
    return m;
}

// 16-point Gauss-Legendre nodes/weights on [-1, 1], by Newton on the
// Legendre recurrence.
struct Gauss16 {
    double node[16];
    double weight[16];
    Gauss16() {
        constexpr int n = 16;
        for (int i = 0; i < n / 2; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            node[i] = -x;
            node[n - 1 - i] = x;
            weight[i] = weight[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }
};

const Gauss16& gauss16() {
    static const Gauss16 table;
    return table;
}

}  // namespace

double alpha_of(const KilledGenerator& kg, const Distribution& mu) {
    require_charges_e_only(kg, mu);
    double alpha = 0.0;
    for (std::size_t i = 0; i < kg.e_size(); ++i) alpha += kg.eta(i) * mu[i];
    return alpha;
}

QsdCheck is_qsd(const KilledGenerator& kg, const Distribution& mu, double tol) {
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
    const double alpha = alpha_of(kg, mu);
    const std::vector<double> r = correction_vector(kg, mu, alpha);
    const double residual = linf(r);
    return {residual < tol, residual, alpha};
}

TimeGrid default_grid(double alpha) {
    const double rate = alpha > 0.0 ? alpha : 1.0;
    return TimeGrid::geometric(0.05 / rate, 5.0 / rate, 32);
}

namespace {

ExponentialityReport survey_deviation(const KilledGenerator& kg, const Distribution& mu,
                                      const TimeGrid& grid, double tol, double alpha) {
    ExponentialityReport rep;
    rep.alpha = alpha;
    rep.grid.assign(grid.times().begin(), grid.times().end());
    rep.deviations.reserve(grid.size());
    for (const double t : grid.times()) {
        const double s = survival(kg, mu, t);
        const double dev = std::abs(s - std::exp(-alpha * t));
        rep.deviations.push_back(dev);
        rep.max_abs_dev = std::max(rep.max_abs_dev, dev);
        const double at = alpha * t;
        if (at >= 0.5 && at <= 3.0) rep.high_confidence = true;
    }
    rep.verdict = rep.max_abs_dev < tol ? ExpVerdict::exponential : ExpVerdict::not_exponential;
    return rep;
}

}  // namespace

ExponentialityReport check_exponentiality(const KilledGenerator& kg, const Distribution& mu,
                                          const TimeGrid& grid, double tol) {
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
    require_charges_e_only(kg, mu);

    const double alpha = alpha_of(kg, mu);
    ExponentialityReport rep = survey_deviation(kg, mu, grid, tol, alpha);
    if (alpha == 0.0) {
        // T cannot be exponential when no killing is felt under μ.
        rep.verdict = ExpVerdict::not_exponential;
        rep.high_confidence = false;
        rep.reason = "zero killing rate under mu";
    }
    return rep;
}

ExponentialityReport check_exponentiality_at(const KilledGenerator& kg, const Distribution& mu,
                                             const TimeGrid& grid, double tol, double alpha) {
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
    if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
    require_charges_e_only(kg, mu);
    return survey_deviation(kg, mu, grid, tol, alpha);
}

LadderResult mu_ladder(const KilledGenerator& kg, const Distribution& mu, std::size_t n) {
    require_charges_e_only(kg, mu);
    const double alpha = alpha_of(kg, mu);
    if (alpha == 0.0) throw ValidationError("alpha is zero under mu: no ladder exists");

    constexpr double neg_slack = 1e-12;
    constexpr double converge_tol = 1e-12;

    LadderResult result;
    std::vector<double> cur(mu.e_mass().begin(), mu.e_mass().end());
    for (std::size_t level = 1; level <= n; ++level) {
        std::vector<double> qt = mu_qt(kg, cur);
        std::vector<double> cand(kg.e_size());
        for (std::size_t j = 0; j < kg.e_size(); ++j) cand[j] = -qt[j] / alpha;

        bool negative = false, exceeds = false;
        double sum = 0.0, diff = 0.0;
        for (std::size_t j = 0; j < kg.e_size(); ++j) {
            if (cand[j] < -neg_slack) negative = true;
            if (cand[j] > 1.0 + neg_slack) exceeds = true;
            sum += cand[j];
            diff = std::max(diff, std::abs(cand[j] - cur[j]));
        }
        if (negative) {
            result.terminated_reason = LadderStop::negativity;
            return result;
        }
        if (exceeds) {
            result.terminated_reason = LadderStop::exceeds_alpha_power;
            return result;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ValidationError(
                "ladder level mass drifted to " + std::to_string(sum) +
                "; mu does not make the passage time exponential at this rate");

        for (double& c : cand) c = std::max(c, 0.0);
        result.levels.push_back(Distribution::over_e(cand));
        result.valid_up_to = level;
        if (diff < converge_tol) {
            result.terminated_reason = LadderStop::converged;
            return result;
        }
        cur = std::move(cand);
    }
    result.terminated_reason = LadderStop::requested_n;
    return result;
}

namespace {

// Left multiply by the E-only uniformized kernel K_E = I + Q^T_E/Λ'. The
// rate is inflated 5% past the minimal Λ so the kernel has a positive
// diagonal (an exactly periodic kernel would defeat power iteration).
struct EKernel {
    const KilledGenerator& kg;
    double lambda;

    explicit EKernel(const KilledGenerator& k) : kg(k) {
        double max_exit = 0.0;
        for (std::size_t i = 0; i < kg.e_size(); ++i)
            max_exit = std::max(max_exit, kg.exit_rate(i));
        lambda = max_exit > 0.0 ? 1.05 * max_exit : 1.0;
    }

    void operator()(const std::vector<double>& x, std::vector<double>& y) const {
        y.assign(kg.e_size(), 0.0);
        for (std::size_t i = 0; i < kg.e_size(); ++i) {
            const double xi = x[i];
            if (xi == 0.0) continue;
            y[i] += xi * (1.0 - kg.exit_rate(i) / lambda);
            for (const auto& e : kg.row(i)) y[e.col] += xi * (e.rate / lambda);
        }
    }
};

}  // namespace

double decay_rate(const KilledGenerator& kg) {
    return perron_qsd(kg).alpha;
}

PerronQsd perron_qsd(const KilledGenerator& kg) {
    kg.base().require_e_irreducible();
    const EKernel kernel(kg);
    detail::PerronResult r =
        detail::perron_left(kg.e_size(), kernel, defaults::rayleigh_tol,
                            defaults::max_power_iterations);
    const double alpha_star = kernel.lambda * (1.0 - r.value);
    double total = 0.0;
    for (const double v : r.vec) total += v;
    for (double& v : r.vec) v /= total;
    return {Distribution::over_e(std::move(r.vec)), alpha_star};
}

Distribution yaglom_correction(const KilledGenerator& kg, const Distribution& mu,
                               double horizon, double tol) {
    if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
    require_charges_e_only(kg, mu);

    const double alpha = alpha_of(kg, mu);
    if (alpha == 0.0) throw ValidationError("alpha is zero under mu: no quasi-limit");
    {
        const ExponentialityReport pre = check_exponentiality(kg, mu, default_grid(alpha), tol);
        if (pre.verdict != ExpVerdict::exponential)
            throw ValidationError(
                "passage time is not exponential under mu (max deviation " +
                std::to_string(pre.max_abs_dev) + "); the correction integral does not apply");
    }

    const std::vector<double> w = correction_vector(kg, mu, alpha);
    if (linf(w) <= 1e-12) return mu;  // already quasi-stationary

    const auto integrand = [&](double t) {
        std::vector<double> g = detail::uniformized_apply(kg, w, t);
        const double scale = std::exp(alpha * t);
        for (double& x : g) x *= scale;
        return g;
    };

    double h = horizon;
    bool decayed = false;
    for (int doubling = 0; doubling <= 10; ++doubling) {
        if (linf(integrand(h)) < tol * alpha) {
            decayed = true;
            break;
        }
        if (doubling < 10) h *= 2.0;
    }
    if (!decayed)
        throw ConvergenceError("no quasi-limit detected at this precision: integrand has not "
                               "decayed below tolerance by t = " + std::to_string(h));

    // Geometric panels 0 < h0 < 3h0 < 7h0 < ... capped at h, 16 Gauss nodes
    // each. The first panel is short relative to 1/Λ so the fastest
    // transient is resolved.
    const double h0 = std::min(0.5 / kg.lambda(), h);
    std::vector<double> cuts{0.0};
    for (double next = h0; cuts.back() < h; next = 2.0 * next + h0)
        cuts.push_back(std::min(next, h));

    const Gauss16& g16 = gauss16();
    std::vector<double> integral(kg.e_size() + 1, 0.0);
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        const double mid = 0.5 * (cuts[p] + cuts[p + 1]);
        const double half = 0.5 * (cuts[p + 1] - cuts[p]);
        for (int k = 0; k < 16; ++k) {
            const std::vector<double> g = integrand(mid + half * g16.node[k]);
            const double wk = half * g16.weight[k];
            for (std::size_t j = 0; j < integral.size(); ++j) integral[j] += wk * g[j];
        }
    }

    std::vector<double> pi(mu.mass().begin(), mu.mass().end());
    for (std::size_t j = 0; j < pi.size(); ++j) pi[j] += integral[j];

    double total = 0.0;
    for (const double x : pi) total += x;
    if (std::abs(total - 1.0) >= 1e-6)
        throw ConvergenceError("correction integral mass " + std::to_string(total) +
                               " is too far from 1; no quasi-limit at this precision");
    // A quasi-limit charges E only; the residual Δ entry is quadrature noise.
    std::vector<double> e_mass(pi.begin(), pi.end() - 1);
    for (double& x : e_mass) x = std::max(x, 0.0);
    return Distribution::normalized(std::move(e_mass));
}

}  // namespace fpt
