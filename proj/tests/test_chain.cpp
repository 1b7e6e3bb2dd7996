#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fpt/branching.hpp"
#include "fpt/chain.hpp"
#include "fpt/errors.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fpt;
using namespace fixtures;

namespace {

// The killed generator over E ∪ {Δ} as a dense matrix, for the oracles.
oracle::Matrix dense_killed(const KilledGenerator& kg) {
    const std::size_t n = kg.e_size();
    oracle::Matrix m(n + 1, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        m[i][i] = -kg.exit_rate(i);
        for (const auto& e : kg.row(i)) m[i][e.col] = e.rate;
        m[i][n] = kg.eta(i);
    }
    return m;
}

std::vector<double> mass_vector(const Distribution& d) {
    return {d.mass().begin(), d.mass().end()};
}

}  // namespace

TEST_CASE("build_killed on chain A") {
    const Generator gen = chain_a();
    const KilledGenerator kg = build_killed(gen);
    REQUIRE(kg.e_size() == 2);
    CHECK(kg.eta(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(kg.eta(1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(kg.exit_rate(0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(kg.exit_rate(1) == doctest::Approx(2.5).epsilon(1e-15));
    REQUIRE(kg.row(0).size() == 1);
    CHECK(kg.row(0)[0].col == 1);
    CHECK(kg.row(0)[0].rate == 1.0);
    REQUIRE(kg.row(1).size() == 1);
    CHECK(kg.row(1)[0].col == 0);
    CHECK(kg.row(1)[0].rate == 2.0);
    CHECK(kg.lambda() == doctest::Approx(2.5));
}

TEST_CASE("build_killed single-state and empty-killing rows") {
    const KilledGenerator single = build_killed(single_state(0.7));
    REQUIRE(single.e_size() == 1);
    CHECK(single.eta(0) == 0.7);
    CHECK(single.exit_rate(0) == 0.7);

    const KilledGenerator c = build_killed(chain_c());
    CHECK(c.eta(0) == 1.0);
    CHECK(c.eta(1) == 0.0);  // no rate from 2 into D
}

TEST_CASE("generator validation errors") {
    CHECK_THROWS_AS(Generator::create({"0", "1"}, {"0", "1"}, {}), ValidationError);
    CHECK_THROWS_AS(Generator::create({"0", "0"}, {"0"}, {}), ValidationError);
    CHECK_THROWS_AS(Generator::create({"0", "1"}, {}, {}), ValidationError);
    CHECK_THROWS_AS(Generator::create({"0", "1"}, {"9"}, {}), ValidationError);
    CHECK_THROWS_AS(Generator::create({"0", "1"}, {"0"}, {{"1", "1", 0.5}}), ValidationError);
    CHECK_THROWS_AS(Generator::create({"0", "1"}, {"0"}, {{"1", "0", -0.5}}), ValidationError);
    CHECK_THROWS_AS(
        Generator::create({"0", "1"}, {"0"}, {{"1", "0", 0.5}, {"1", "0", 0.25}}),
        ValidationError);
    // the row is named in rate errors
    try {
        Generator::create({"0", "1", "2"}, {"0"}, {{"1", "0", 1.0}, {"2", "0", -1.0}});
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("rates[1]") != std::string::npos);
    }
}

TEST_CASE("conservativity of random generators") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 30; ++rep) {
        const Generator gen = random_chain(rng);
        for (std::size_t s = 0; s < gen.size(); ++s) {
            double sum = 0.0, comp = 0.0;  // compensated row sum
            for (const auto& e : gen.row(s)) {
                const double y = e.rate - comp;
                const double t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            }
            sum -= gen.exit_rate(s);  // add the implied diagonal
            CHECK(std::abs(sum) < 1e-14 * std::max(1.0, gen.exit_rate(s)));
        }
    }
}

TEST_CASE("transient scalar case and identity at t = 0") {
    const KilledGenerator kg = build_killed(single_state(1.0));
    const Distribution mu = Distribution::point(1, 0);

    const Distribution at_ln2 = transient(kg, mu, std::log(2.0));
    CHECK(at_ln2[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(at_ln2.delta_mass() == doctest::Approx(0.5).epsilon(1e-12));

    const Distribution frozen = transient(kg, mu, 0.0);
    CHECK(frozen[0] == 1.0);
    CHECK(frozen.delta_mass() == 0.0);
}

TEST_CASE("transient matches the dense matrix-exponential oracle on chain A") {
    const KilledGenerator kg = build_killed(chain_a());
    const Distribution mu = Distribution::over_e({0.5, 0.5});

    const Distribution got = transient(kg, mu, 1.0);
    CHECK(got.delta_mass() == doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-12));

    const oracle::Matrix p = oracle::expm(dense_killed(kg), 1.0);
    const std::vector<double> expected = oracle::row_times(mass_vector(mu), p);
    CHECK(linf_diff(mass_vector(got), expected) < 1e-12);
}

TEST_CASE("transient rejects negative times and reports truncation") {
    const KilledGenerator kg = build_killed(chain_a());
    const Distribution mu = Distribution::uniform(2);
    CHECK_THROWS_AS(transient(kg, mu, -1.0), ValidationError);

    TransientOptions opt;
    opt.max_terms = 3;
    try {
        transient(kg, mu, 5.0, opt);
        FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
        CHECK(std::string(e.what()).find("tail") != std::string::npos);
    }
}

TEST_CASE("survival on the constant-killing chain and at t = 0") {
    const KilledGenerator kg = build_killed(chain_a());
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 5; ++rep) {
        const Distribution mu = random_law(rng, 2);
        CHECK(survival(kg, mu, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
        for (const double t : {0.3, 1.0, 2.7})
            CHECK(survival(kg, mu, t) == doctest::Approx(std::exp(-0.5 * t)).epsilon(1e-12));
    }
}

TEST_CASE("survival from chain C state 2 is non-exponential near zero") {
    const KilledGenerator kg = build_killed(chain_c());
    const Distribution mu = Distribution::point(2, 1);
    const double s = survival(kg, mu, 0.1);

    const oracle::Matrix p = oracle::expm(dense_killed(kg), 0.1);
    const std::vector<double> expected = oracle::row_times(mass_vector(mu), p);
    CHECK(s == doctest::Approx(1.0 - expected[2]).epsilon(1e-12));
    CHECK(s == doctest::Approx(1.0 - 0.00468).epsilon(1e-3));
    CHECK(s > std::exp(-0.1));  // strictly above e^{-q_2 t}
}

TEST_CASE("check_diff_condition reports the weighted exit rate") {
    const KilledGenerator kg = build_killed(chain_a());
    const DiffCondition dc = check_diff_condition(kg, Distribution::over_e({0.5, 0.5}));
    CHECK(dc.verdict == DiffCondition::Verdict::sufficient);
    CHECK(dc.weighted_exit_rate == doctest::Approx(2.0).epsilon(1e-14));

    // truncated birth-death with a geometric law: value equals the plain sum
    const BirthDeathSpec spec = BirthDeathSpec::create(1.0, 2.0);
    const std::size_t levels = 30;
    const KilledGenerator bd = build_killed(truncated_bd_chain(spec, levels));
    std::vector<double> geom(levels);
    for (std::size_t k = 0; k < levels; ++k) geom[k] = std::pow(0.5, double(k + 1));
    const Distribution mu = Distribution::normalized(geom);
    double expected = 0.0;
    for (std::size_t k = 0; k < levels; ++k) expected += bd.exit_rate(k) * mu[k];
    const DiffCondition bd_dc = check_diff_condition(bd, mu);
    CHECK(bd_dc.verdict == DiffCondition::Verdict::sufficient);
    CHECK(bd_dc.weighted_exit_rate == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("semigroup property on random small chains") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 12; ++rep) {
        const Generator gen = random_chain(rng);
        const KilledGenerator kg = build_killed(gen);
        const Distribution mu = random_law(rng, kg.e_size());
        const double s = 0.4, t = 0.9;
        const Distribution one_shot = transient(kg, mu, s + t);
        const Distribution two_step = transient(kg, transient(kg, mu, s), t);
        CHECK(linf_diff(mass_vector(one_shot), mass_vector(two_step)) < 1e-10);
    }
}

TEST_CASE("absorbed mass is nondecreasing along any grid") {
    std::mt19937_64 rng(31);
    const TimeGrid grid = TimeGrid::geometric(0.01, 20.0, 25);
    for (int rep = 0; rep < 8; ++rep) {
        const KilledGenerator kg = build_killed(random_chain(rng));
        const Distribution mu = random_law(rng, kg.e_size());
        double prev = 0.0;
        for (const double t : grid.times()) {
            const double dm = transient(kg, mu, t).delta_mass();
            CHECK(dm >= prev - 1e-12);
            prev = dm;
        }
    }
}

TEST_CASE("backward-equation residual by central differences") {
    std::mt19937_64 rng(47);
    for (int rep = 0; rep < 8; ++rep) {
        const KilledGenerator kg = build_killed(random_chain(rng));
        const std::size_t n = kg.e_size();
        const Distribution mu = random_law(rng, n);
        const double t = 0.7, h = 1e-4;

        const std::vector<double> lo = mass_vector(transient(kg, mu, t - h));
        const std::vector<double> hi = mass_vector(transient(kg, mu, t + h));

        // mu Q^T, then propagated to time t
        std::vector<double> muq(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            muq[i] -= mu[i] * kg.exit_rate(i);
            for (const auto& e : kg.row(i)) muq[e.col] += mu[i] * e.rate;
            muq[n] += mu[i] * kg.eta(i);
        }
        const std::vector<double> rhs = detail::uniformized_apply(kg, muq, t);
        for (std::size_t j = 0; j <= n; ++j) {
            const double lhs = (hi[j] - lo[j]) / (2.0 * h);
            CHECK(lhs == doctest::Approx(rhs[j]).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("distribution and grid validation") {
    CHECK_THROWS_AS(Distribution::over_e({0.5, 0.4}), ValidationError);
    CHECK_THROWS_AS(Distribution::over_e({1.5, -0.5}), ValidationError);
    CHECK_THROWS_AS(Distribution::normalized({0.0, 0.0}), ValidationError);
    CHECK(Distribution::normalized({2.0, 2.0})[1] == 0.5);

    CHECK_THROWS_AS(TimeGrid::of({}), ValidationError);
    CHECK_THROWS_AS(TimeGrid::of({0.5, 0.5}), ValidationError);
    CHECK_THROWS_AS(TimeGrid::of({-0.5, 0.5}), ValidationError);
    CHECK_THROWS_AS(TimeGrid::geometric(0.0, 1.0, 8), ValidationError);
    const TimeGrid g = TimeGrid::of({0.0, 0.5});
    CHECK(g.size() == 2);
}

TEST_CASE("build_killed rejects lambda multipliers below one") {
    CHECK_THROWS_AS(build_killed(chain_a(), 0.5), ValidationError);
    const KilledGenerator inflated = build_killed(chain_a(), 2.0);
    CHECK(inflated.lambda() == doctest::Approx(5.0));
    // the transient law does not depend on the uniformization rate
    const Distribution mu = Distribution::over_e({0.25, 0.75});
    const KilledGenerator plain = build_killed(chain_a());
    CHECK(linf_diff(mass_vector(transient(plain, mu, 1.3)),
                    mass_vector(transient(inflated, mu, 1.3))) < 1e-13);
}
