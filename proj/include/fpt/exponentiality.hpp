#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fpt/chain.hpp"

namespace fpt {

/// Rate α = Σ_{i∈E} eta_i μ_i. Requires μ to charge E only.
double alpha_of(const KilledGenerator& kg, const Distribution& mu);

struct QsdCheck {
    bool is_qsd = false;
    /// ∞-norm of μQ^T + αμ - αδ over E ∪ {Δ} with α = alpha_of(kg, μ).
    double residual = 0.0;
    double alpha = 0.0;
};

/// Quasi-stationarity test: μ is a QSD iff μQ^T = -αμ + αδ.
QsdCheck is_qsd(const KilledGenerator& kg, const Distribution& mu, double tol);

enum class ExpVerdict { exponential, not_exponential };

struct ExponentialityReport {
    double alpha = 0.0;
    double max_abs_dev = 0.0;
    ExpVerdict verdict = ExpVerdict::not_exponential;
    std::vector<double> grid;
    std::vector<double> deviations;  // |P_μ(T>t) - e^{-αt}| per grid point
    /// True when the grid contains some t with αt in [0.5, 3]; without such
    /// a point the verdict rests on an uninformative stretch of the curve.
    bool high_confidence = false;
    /// Nonempty only for degenerate outcomes (e.g. zero killing rate under μ).
    std::string reason;
};

/// Certifies P_μ(T>t) = e^{-αt} on the grid, α = alpha_of(kg, μ), by
/// comparing uniformization survival against the exponential at every grid
/// point. verdict = exponential iff the sup deviation stays below tol.
ExponentialityReport check_exponentiality(const KilledGenerator& kg, const Distribution& mu,
                                          const TimeGrid& grid, double tol);

/// Same certification against a caller-supplied rate (must be positive)
/// instead of alpha_of.
ExponentialityReport check_exponentiality_at(const KilledGenerator& kg, const Distribution& mu,
                                             const TimeGrid& grid, double tol, double alpha);

/// The default certification grid: 32 geometrically spaced times with αt
/// spanning [0.05, 5] (rate 1 is substituted when α is zero).
TimeGrid default_grid(double alpha);

enum class LadderStop { requested_n, negativity, exceeds_alpha_power, converged };

struct LadderResult {
    std::vector<Distribution> levels;  // μ⁽¹⁾ … μ⁽ᵛ⁾
    std::size_t valid_up_to = 0;
    LadderStop terminated_reason = LadderStop::requested_n;
};

/// Iterates μ⁽ᵏ⁺¹⁾ = (-1/α) μ⁽ᵏ⁾Q^T on E with α = alpha_of(kg, μ). Stops
/// early when a candidate component drops below -1e-12 or exceeds the
/// α-power bound (component > 1), or when successive levels agree to 1e-12.
/// The caller is responsible for μ passing check_exponentiality first; the
/// ladder is meaningless otherwise and a drifting level sum is rejected.
LadderResult mu_ladder(const KilledGenerator& kg, const Distribution& mu, std::size_t n);

/// Common decay rate α* = -(largest real eigenvalue of the E-restriction of
/// Q^T), by Perron power iteration on the uniformized kernel. Requires the
/// E-restriction irreducible.
double decay_rate(const KilledGenerator& kg);

/// The unique QSD of an irreducible E-restriction together with its rate:
/// the normalized left Perron eigenvector of Q^T restricted to E.
struct PerronQsd {
    Distribution mu;
    double alpha = 0.0;
};
PerronQsd perron_qsd(const KilledGenerator& kg);

/// Quasi-limiting distribution by the correction integral
///   π = μ + ∫₀^∞ (μQ^T + α(μ-δ)) e^{αt} P^T(t) dt,
/// evaluated with composite 16-node Gauss-Legendre quadrature on a geometric
/// subdivision of [0, H]. H starts at `horizon` and doubles (at most 10
/// times) until the integrand's ∞-norm falls below tol·α; if it never does,
/// no quasi-limit is detectable at this precision and the call fails.
/// Requires check_exponentiality(kg, mu, default grid, tol) to pass.
Distribution yaglom_correction(const KilledGenerator& kg, const Distribution& mu,
                               double horizon, double tol);

}  // namespace fpt
