#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fpt/chain.hpp"
#include "fpt/defaults.hpp"

namespace fpt {

/// Exponential envelope of the first-passage tail: for every start state i
/// and t ≥ 0, e^{-alpha1·t} ≤ P_i(T > t) ≤ e^{-alpha0·t}.
struct Envelope {
    double alpha0 = 0.0;  // inf_i eta_i
    double alpha1 = 0.0;  // sup_i eta_i
};

Envelope envelope(const KilledGenerator& kg);

enum class Scheme { direct, two_clock };

/// First-passage-time sample. Same (model, μ, n, seed, scheme) always yields
/// identical values, whatever the worker count.
struct SampleSet {
    std::vector<double> values;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::direct;
};

struct SimOptions {
    unsigned workers = 1;
    std::uint64_t max_events = defaults::max_events_per_trajectory;
};

/// Samples T by simulating the full chain (competing exponential clocks on
/// the embedded jump chain) until it enters D. Trajectory k draws from the
/// counter-based substream (seed, k). Trajectories that exceed the event cap
/// (or get stuck in a state with no exit) are censored; any censoring fails
/// the whole run with a CensoringError carrying the count.
SampleSet simulate_direct(const Generator& gen, const Distribution& mu, std::size_t n,
                          std::uint64_t seed, const SimOptions& opt = {});

/// Samples T by the two-clock decomposition: run the D-removed chain with
/// recompensated diagonals, and at each sojourn race an independent killing
/// clock Exp(eta_i) against the holding time. States with eta_i = 0 get a
/// clock that never rings. Identical in law to simulate_direct.
SampleSet simulate_two_clock(const KilledGenerator& kg, const Distribution& mu, std::size_t n,
                             std::uint64_t seed, const SimOptions& opt = {});

struct ExpTest {
    double statistic = 0.0;  // one-sample Kolmogorov-Smirnov D
    double p_value = 0.0;
    bool exponential = false;  // accepted at level 0.01
    double alpha = 0.0;        // rate tested against (fitted when requested)
    bool fitted = false;
};

/// One-sample KS test of the sample against Exp(alpha). Pass nullopt to fit
/// alpha = 1/mean, in which case the p-value comes from a seeded parametric
/// bootstrap (999 resamples) to account for the estimation. Requires
/// n ≥ 100 and strictly positive values.
ExpTest test_exponential(const SampleSet& s, std::optional<double> alpha);

struct KsTwoSample {
    double statistic = 0.0;
    double p_value = 0.0;
};

/// Two-sample KS statistic and asymptotic p-value.
KsTwoSample ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One value per line under a `T` header, shortest round-trip formatting.
void write_samples_csv(const SampleSet& s, std::ostream& os);

}  // namespace fpt
