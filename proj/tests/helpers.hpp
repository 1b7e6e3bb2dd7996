#pragma once

// Shared fixtures for the test suites: the two reference chains used
// throughout, a seeded random-chain generator, and small utilities.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fpt/chain.hpp"
#include "fpt/lumping.hpp"

namespace fixtures {

// Two transient states with constant killing rate 0.5:
//   1 -> 0 at 0.5, 1 -> 2 at 1.0, 2 -> 0 at 0.5, 2 -> 1 at 2.0.
inline fpt::Generator chain_a() {
    return fpt::Generator::create({"0", "1", "2"}, {"0"},
                                  {{"1", "0", 0.5}, {"1", "2", 1.0},
                                   {"2", "0", 0.5}, {"2", "1", 2.0}});
}

// Killing only from state 1; survival from state 2 is non-exponential.
inline fpt::Generator chain_c() {
    return fpt::Generator::create({"0", "1", "2"}, {"0"},
                                  {{"1", "0", 1.0}, {"1", "2", 1.0}, {"2", "1", 1.0}});
}

inline fpt::Generator single_state(double eta) {
    return fpt::Generator::create({"0", "1"}, {"0"}, {{"1", "0", eta}});
}

// A 5-state realization of the two-transient-block emergence chain with
// lumped rates qbar21=1, qbar31=2, qbar23=qbar32=0.5. Within-block rates are
// arbitrary; block sums are constant by construction.
inline fpt::Generator emergence_5state() {
    return fpt::Generator::create(
        {"d", "a", "b", "c", "e"}, {"d"},
        {
            {"a", "d", 1.0}, {"a", "c", 0.25}, {"a", "e", 0.25}, {"a", "b", 0.3},
            {"b", "d", 1.0}, {"b", "c", 0.5}, {"b", "a", 0.7},
            {"c", "d", 2.0}, {"c", "a", 0.5}, {"c", "e", 0.2},
            {"e", "d", 2.0}, {"e", "a", 0.1}, {"e", "b", 0.4},
        });
}

inline fpt::Partition emergence_partition(const fpt::Generator& gen) {
    return fpt::Partition::create(gen, {{"d"}, {"a", "b"}, {"c", "e"}});
}

struct RandomChainOptions {
    std::size_t min_transient = 2;
    std::size_t max_transient = 6;
    // When set, every transient state kills at exactly this rate.
    double constant_eta = -1.0;
    // Otherwise, each state kills with this probability.
    double kill_prob = 0.6;
};

// Random conservative chain with a strongly connected E (cycle backbone plus
// extra edges) and at least one state with a positive rate into D, so the
// passage time is almost surely finite.
inline fpt::Generator random_chain(std::mt19937_64& rng, const RandomChainOptions& opt = {}) {
    std::uniform_real_distribution<double> unit(0.1, 1.0);
    std::uniform_int_distribution<std::size_t> size_dist(opt.min_transient, opt.max_transient);
    const std::size_t n = size_dist(rng);

    std::vector<std::string> states{"d"};
    for (std::size_t i = 1; i <= n; ++i) states.push_back("s" + std::to_string(i));

    std::vector<fpt::RateTriple> rates;
    for (std::size_t i = 1; i <= n; ++i) {
        const std::string from = states[i];
        const std::string next = states[i % n + 1];
        if (n > 1) rates.push_back({from, next, 0.5 + unit(rng)});
        for (std::size_t j = 1; j <= n; ++j) {
            if (j == i || j == i % n + 1) continue;
            if (unit(rng) < 0.45) rates.push_back({from, states[j], unit(rng)});
        }
        if (opt.constant_eta >= 0.0) {
            if (opt.constant_eta > 0.0) rates.push_back({from, "d", opt.constant_eta});
        } else if (i == 1 || unit(rng) < opt.kill_prob) {
            rates.push_back({from, "d", unit(rng)});
        }
    }
    return fpt::Generator::create(std::move(states), {"d"}, rates);
}

// Random initial law over n_e states.
inline fpt::Distribution random_law(std::mt19937_64& rng, std::size_t n_e) {
    std::uniform_real_distribution<double> unit(0.01, 1.0);
    std::vector<double> w(n_e);
    for (double& x : w) x = unit(rng);
    return fpt::Distribution::normalized(std::move(w));
}

inline double linf_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace fixtures
