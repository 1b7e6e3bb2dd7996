#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "fpt/chain.hpp"
#include "fpt/errors.hpp"
#include "fpt/exponentiality.hpp"
#include "fpt/lumping.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fpt;
using namespace fixtures;

TEST_CASE("partition validation on chain A") {
    const Generator gen = chain_a();

    const Partition two = Partition::create(gen, {{"0"}, {"1", "2"}});
    const LumpedGenerator lumped = validate_partition(gen, two);
    CHECK(lumped.rate(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(lumped.rate(1, 1) == doctest::Approx(-0.5).epsilon(1e-15));

    // singleton blocks are always lumpable and reproduce the killed matrix
    const Partition singles = Partition::create(gen, {{"0"}, {"1"}, {"2"}});
    const LumpedGenerator identity = validate_partition(gen, singles);
    CHECK(identity.rate(1, 0) == 0.5);
    CHECK(identity.rate(1, 2) == 1.0);
    CHECK(identity.rate(2, 0) == 0.5);
    CHECK(identity.rate(2, 1) == 2.0);
    CHECK(identity.rate(2, 2) == doctest::Approx(-2.5));
}

TEST_CASE("partition validation rejects chain C's two-block split") {
    const Generator gen = chain_c();
    const Partition part = Partition::create(gen, {{"0"}, {"1", "2"}});
    try {
        validate_partition(gen, part);
        FAIL("expected a lumpability violation");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("(2,1)") != std::string::npos);
        CHECK(msg.find("'1'") != std::string::npos);
        CHECK(msg.find("'2'") != std::string::npos);
    }
}

TEST_CASE("partition structural validation") {
    const Generator gen = chain_a();
    CHECK_THROWS_AS(Partition::create(gen, {{"0", "1", "2"}}), ValidationError);
    CHECK_THROWS_AS(Partition::create(gen, {{"1"}, {"0", "2"}}), ValidationError);
    CHECK_THROWS_AS(Partition::create(gen, {{"0"}, {"1"}}), ValidationError);
    CHECK_THROWS_AS(Partition::create(gen, {{"0"}, {"1", "1", "2"}}), ValidationError);
    CHECK_THROWS_AS(Partition::create(gen, {{"0"}, {"1", "9"}}), ValidationError);
}

TEST_CASE("solve_lumped_qsd closed cases") {
    // single transient block: mass 1 and alpha = the killing rate
    const LumpedGenerator two = LumpedGenerator::from_qbar({{0.0, 0.0}, {0.7, -0.7}});
    const LumpedQsd solved_two = solve_lumped_qsd(two);
    CHECK(solved_two.mu_bar[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(solved_two.alpha == doctest::Approx(0.7).epsilon(1e-13));

    // the emergence chain against the characteristic-polynomial oracle
    const LumpedGenerator emergence = LumpedGenerator::from_qbar({
        {0.0, 0.0, 0.0},
        {1.0, -1.5, 0.5},
        {2.0, 0.5, -2.5},
    });
    const LumpedQsd solved = solve_lumped_qsd(emergence);
    const oracle::Matrix sub{{-1.5, 0.5}, {0.5, -2.5}};
    const auto [lmax, lmin] = oracle::eigen2(sub);
    const auto vec = oracle::left_eigenvector2(sub, lmax);
    CHECK(solved.alpha == doctest::Approx(-lmax).epsilon(1e-12));
    CHECK(solved.mu_bar[1] == doctest::Approx(vec[0]).epsilon(1e-12));
    CHECK(solved.mu_bar[2] == doctest::Approx(vec[1]).epsilon(1e-12));
    CHECK(solved.mu_bar[1] == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
    CHECK(solved.alpha == doctest::Approx(2.0 - std::sqrt(2.0) / 2.0).epsilon(1e-12));

    // singleton lumping of chain A recovers its QSD
    const Generator gen = chain_a();
    const LumpedGenerator singles =
        validate_partition(gen, Partition::create(gen, {{"0"}, {"1"}, {"2"}}));
    const LumpedQsd qsd = solve_lumped_qsd(singles);
    CHECK(qsd.mu_bar[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(qsd.mu_bar[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(qsd.alpha == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("from_qbar validation") {
    CHECK_THROWS_AS(LumpedGenerator::from_qbar({{0.0}}), ValidationError);
    CHECK_THROWS_AS(LumpedGenerator::from_qbar({{0.0, 0.0}, {0.7, -0.7, 0.0}}),
                    ValidationError);
    // absorbing row must be zero
    CHECK_THROWS_AS(LumpedGenerator::from_qbar({{-0.1, 0.1}, {0.7, -0.7}}), ValidationError);
    // rows past the first must balance
    CHECK_THROWS_AS(LumpedGenerator::from_qbar({{0.0, 0.0}, {0.7, -0.6}}), ValidationError);
    CHECK_THROWS_AS(LumpedGenerator::from_qbar({{0.0, 0.0}, {-0.7, 0.7}}), ValidationError);
}

TEST_CASE("solve_lumped_qsd rejects reducible restrictions") {
    const LumpedGenerator decoupled = LumpedGenerator::from_qbar({
        {0.0, 0.0, 0.0},
        {1.0, -1.0, 0.0},
        {2.0, 0.0, -2.0},
    });
    CHECK_THROWS_AS(solve_lumped_qsd(decoupled), ValidationError);
}

TEST_CASE("emergence closed form") {
    const EmergenceLaw law = emergence_closed_form(1.0, 2.0, 0.5, 0.5);
    CHECK(law.mu2 == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
    CHECK(law.alpha == doctest::Approx(2.0 - std::sqrt(2.0) / 2.0).epsilon(1e-14));

    // must agree with the eigen solver on the matching 2x2 lumped chain
    const LumpedQsd solved = solve_lumped_qsd(LumpedGenerator::from_qbar({
        {0.0, 0.0, 0.0},
        {1.0, -1.5, 0.5},
        {2.0, 0.5, -2.5},
    }));
    CHECK(law.mu2 == doctest::Approx(solved.mu_bar[1]).epsilon(1e-12));
    CHECK(law.alpha == doctest::Approx(solved.alpha).epsilon(1e-12));

    // constant killing rate: the switch's stationary law, alpha = c
    const EmergenceLaw constant = emergence_closed_form(0.8, 0.8, 0.3, 0.6);
    CHECK(constant.mu2 == doctest::Approx(0.6 / 0.9).epsilon(1e-14));
    CHECK(constant.alpha == doctest::Approx(0.8).epsilon(1e-14));

    CHECK_THROWS_AS(emergence_closed_form(1.0, 2.0, 0.0, 0.0), ValidationError);
    CHECK_THROWS_AS(emergence_closed_form(-1.0, 2.0, 0.5, 0.5), ValidationError);
}

TEST_CASE("lifting block laws onto the 5-state emergence model") {
    const Generator gen = emergence_5state();
    const Partition part = emergence_partition(gen);
    const LumpedGenerator lg = validate_partition(gen, part);
    CHECK(lg.rate(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(lg.rate(2, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(lg.rate(1, 2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(lg.rate(2, 1) == doctest::Approx(0.5).epsilon(1e-15));

    const LumpedQsd solved = solve_lumped_qsd(lg);
    const KilledGenerator kg = build_killed(gen);
    const double expected_alpha = 2.0 - std::sqrt(2.0) / 2.0;

    const Distribution uniform_within = lift_lumped_law(
        gen, part, solved.mu_bar, {{}, {0.5, 0.5}, {0.5, 0.5}});
    const ExponentialityReport rep =
        check_exponentiality(kg, uniform_within, default_grid(expected_alpha), 1e-8);
    CHECK(rep.verdict == ExpVerdict::exponential);
    CHECK(rep.alpha == doctest::Approx(expected_alpha).epsilon(1e-12));

    // within-block weights do not affect the survival curve
    const Distribution skewed_within = lift_lumped_law(
        gen, part, solved.mu_bar, {{}, {0.9, 0.1}, {0.25, 0.75}});
    const ExponentialityReport rep2 =
        check_exponentiality(kg, skewed_within, default_grid(expected_alpha), 1e-8);
    CHECK(rep2.verdict == ExpVerdict::exponential);
    CHECK(rep2.alpha == doctest::Approx(rep.alpha).epsilon(1e-14));
    for (const double t : rep.grid)
        CHECK(survival(kg, uniform_within, t) ==
              doctest::Approx(survival(kg, skewed_within, t)).epsilon(1e-10));
}

TEST_CASE("lift validation errors") {
    const Generator gen = emergence_5state();
    const Partition part = emergence_partition(gen);
    CHECK_THROWS_AS(lift_lumped_law(gen, part, {0.1, 0.5, 0.4}, {{}, {1.0, 0.0}, {1.0, 0.0}}),
                    ValidationError);
    CHECK_THROWS_AS(lift_lumped_law(gen, part, {0.0, 0.5}, {{}, {1.0, 0.0}}), ValidationError);
    CHECK_THROWS_AS(lift_lumped_law(gen, part, {0.0, 0.5, 0.5}, {{}, {1.0}, {1.0, 0.0}}),
                    ValidationError);
}

TEST_CASE("singleton lifting is reindexing") {
    const Generator gen = chain_a();
    const Partition singles = Partition::create(gen, {{"0"}, {"1"}, {"2"}});
    const Distribution mu =
        lift_lumped_law(gen, singles, {0.0, 0.25, 0.75}, {{}, {1.0}, {1.0}});
    CHECK(mu[0] == 0.25);
    CHECK(mu[1] == 0.75);
}

TEST_CASE("property: block masses of the transient law commute with lumping") {
    const Generator gen = emergence_5state();
    const Partition part = emergence_partition(gen);
    const LumpedGenerator lg = validate_partition(gen, part);
    const KilledGenerator kg = build_killed(gen);
    const KilledGenerator lumped_kg = build_killed(lg.as_generator());

    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 4; ++rep) {
        // random block law lifted with random within-block weights
        std::uniform_real_distribution<double> unit(0.1, 1.0);
        const double m2 = unit(rng);
        const std::vector<double> mu_bar{0.0, m2, 1.0 - m2};
        const double w2 = unit(rng), w3 = unit(rng);
        const Distribution mu = lift_lumped_law(
            gen, part, mu_bar, {{}, {w2, 1.0 - w2}, {w3, 1.0 - w3}});
        const Distribution mu_lumped = Distribution::over_e({m2, 1.0 - m2});

        for (const double t : {0.2, 0.7, 1.9}) {
            const Distribution full = transient(kg, mu, t);
            const Distribution coarse = transient(lumped_kg, mu_lumped, t);
            // blocks 2 and 3 sit at E indices {a,b} = {0,1} and {c,e} = {2,3}
            CHECK(full[0] + full[1] == doctest::Approx(coarse[0]).epsilon(1e-10));
            CHECK(full[2] + full[3] == doctest::Approx(coarse[1]).epsilon(1e-10));
            CHECK(full.delta_mass() == doctest::Approx(coarse.delta_mass()).epsilon(1e-10));
        }
    }
}

TEST_CASE("property: constant killing rate makes every law exponential") {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 10; ++rep) {
        RandomChainOptions opt;
        opt.constant_eta = 0.4 + 0.2 * static_cast<double>(rep % 5);
        const Generator gen = random_chain(rng, opt);
        const KilledGenerator kg = build_killed(gen);

        // the coarse {D, E} partition is lumpable precisely because eta is constant
        std::vector<std::string> e_labels;
        for (const std::size_t s : gen.e_indices()) e_labels.push_back(gen.label(s));
        const Partition coarse = Partition::create(gen, {{"d"}, e_labels});
        const LumpedGenerator lg = validate_partition(gen, coarse);
        CHECK(lg.rate(1, 0) == doctest::Approx(opt.constant_eta).epsilon(1e-13));

        for (int law = 0; law < 10; ++law) {
            const Distribution mu = random_law(rng, kg.e_size());
            const ExponentialityReport rep_out =
                check_exponentiality(kg, mu, default_grid(opt.constant_eta), 1e-9);
            CHECK(rep_out.verdict == ExpVerdict::exponential);
            CHECK(rep_out.alpha == doctest::Approx(opt.constant_eta).epsilon(1e-12));
        }
    }
}
