#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "fpt/chain.hpp"
#include "fpt/simulate.hpp"

namespace fpt {

/// Linear birth-death process with per-capita birth rate lambda and death
/// rate nu; only the subcritical case lambda < nu is supported (the closed
/// forms below degenerate at criticality).
struct BirthDeathSpec {
    double lambda = 0.0;
    double nu = 0.0;

    static BirthDeathSpec create(double lambda, double nu);
    /// Malthusian parameter rho = nu - lambda (mean decay exponent).
    double rho() const noexcept { return nu - lambda; }
};

/// Extinction probability q_t = P_1(Z_t = 0), evaluated in an overflow-free
/// arrangement so large (nu-lambda)·t saturates cleanly at 1.
double bd_extinction_prob(const BirthDeathSpec& spec, double t);

/// Inverse of t ↦ q_t on [0, 1); errors at u ≥ 1 (infinite time).
double bd_q_inverse(const BirthDeathSpec& spec, double u);

/// Generating function G_{μ_α}(t) = 1 - ((nu - lambda·t)/(nu(1-t)))^{-α/(nu-lambda)}
/// of the unique law μ_α that makes the extinction time exponential with
/// rate α. Defined for t in [0, 1).
double bd_mu_alpha_gf(const BirthDeathSpec& spec, double alpha, double t);

enum class BdClassification { qsd, exponential_only };

struct BdCoeffs {
    /// coeffs[k-1] = μ_α(k) for k = 1..kmax.
    std::vector<double> coeffs;
    BdClassification classification = BdClassification::exponential_only;
};

/// Taylor coefficients of bd_mu_alpha_gf at 0 by exact power-series
/// composition (series log of the rational inner function, then series exp).
/// μ_α is quasi-stationary exactly when α ≤ rho.
BdCoeffs bd_mu_alpha_coeffs(const BirthDeathSpec& spec, double alpha, std::size_t kmax);

/// The linear birth-death chain truncated at population `levels`, as a
/// Generator with states "0".."levels" and target {"0"}. The top level
/// simply loses its birth rate.
Generator truncated_bd_chain(const BirthDeathSpec& spec, std::size_t levels);

/// Two-type branching spec: each individual branches at branch_rate and is
/// replaced by (k1 type-1, k2 type-2) children with probability p; the empty
/// offspring (0,0) is excluded, so lineages never die out before emergence.
struct TwoTypeSpec {
    struct Offspring {
        unsigned k1 = 0;
        unsigned k2 = 0;
        double p = 0.0;
    };
    std::vector<Offspring> offspring;
    double branch_rate = 1.0;

    static TwoTypeSpec create(std::vector<Offspring> offspring, double branch_rate);
};

struct MultitypeGf {
    std::vector<double> grid;   // the evaluation times
    std::vector<double> q_hat;  // monotone estimate of q_{1,t} = P_{e1}(T > t)
    /// (u, G(u)) pairs tabulating the generating function of μ_α, sorted by
    /// ascending u; G(q_{1,t}) = e^{-αt} by construction.
    std::vector<std::pair<double, double>> table;
};

/// Monte Carlo tabulation of the emergence-time generating function: n
/// seeded trajectories from a single type-1 individual estimate the
/// survival q_{1,t} on the grid (T = first birth of a type-2 individual),
/// the estimate is rearranged to be nonincreasing, and the table pairs it
/// with e^{-αt}. Trajectories whose population exceeds the cap are censored
/// and fail the run.
MultitypeGf multitype_mu_alpha_gf(const TwoTypeSpec& spec, double alpha, const TimeGrid& grid,
                                  std::size_t n, std::uint64_t seed,
                                  const SimOptions& opt = {});

}  // namespace fpt
