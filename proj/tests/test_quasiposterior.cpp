#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oblab/errors.hpp"
#include "oblab/quasiposterior.hpp"
#include "oblab/scenarios.hpp"

using namespace oblab;
using namespace testutil;

namespace {

// Risk table keyed by model, used as both R_n and R.
RiskGrid table(std::vector<double> r) { return {r, r}; }

}  // namespace

TEST_CASE("tiny lambda returns the prior") {
    auto sp = make_space({interval_model(0, -1, 1, 16), interval_model(1, 0, 2, 8, 3.0)});
    const auto pair = quadratic_risk({0.3}, 5.0);
    const auto qp = build(sp, pair, 1e-12, Dataset{});
    CHECK(tv_distance(qp.pi, qp.prior) <= 1e-9);
    CHECK_THROWS(build(sp, pair, 0.0, Dataset{}));
    CHECK_THROWS(build(sp, pair, -1.0, Dataset{}));
}

TEST_CASE("single model with constant risk is the prior") {
    auto sp = make_space({interval_model(0, -1, 1, 10)});
    const auto qp = build_from_risks(sp, table(std::vector<double>(10, 2.5)), 50.0, "const");
    CHECK(tv_distance(qp.pi, qp.prior) <= 1e-15);
}

TEST_CASE("cell weights follow exp(-lambda R) times prior") {
    auto sp = make_space({interval_model(0, -1, 1, 9), point_model(1, 0.0)});
    std::vector<double> r{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.05};
    const auto qp = build_from_risks(sp, table(r), 3.0, "t");
    for (std::size_t a = 0; a < r.size(); ++a)
        for (std::size_t b = 0; b < r.size(); ++b) {
            const double expect = -3.0 * (r[a] - r[b]) + qp.prior_log[a] - qp.prior_log[b];
            CHECK(qp.log_pi[a] - qp.log_pi[b] == doctest::Approx(expect).epsilon(1e-12));
        }
    std::vector<double> bad = r;
    bad[2] = std::nan("");
    CHECK_THROWS_AS(build_from_risks(sp, table(bad), 3.0, "t"), NonFinite);
}

TEST_CASE("risk scaling absorbed into lambda is exact") {
    auto sp = make_space({interval_model(0, -1, 1, 32), point_model(1, 0.2)});
    std::vector<double> r(sp->total_cells()), r4(sp->total_cells());
    for (std::size_t c = 0; c < r.size(); ++c) {
        r[c] = 0.125 * static_cast<double>(c % 7);
        r4[c] = 4.0 * r[c];
    }
    const auto a = build_from_risks(sp, table(r), 40.0, "a");
    const auto b = build_from_risks(sp, table(r4), 10.0, "b");
    for (std::size_t c = 0; c < r.size(); ++c) REQUIRE(a.pi.weight(c) == b.pi.weight(c));
    CHECK(map_model(a) == map_model(b));
}

TEST_CASE("map model and selection") {
    auto s3 = singleton_space(3, {1});
    const auto qp = build_from_risks(s3, table({std::log(5.0), 0.0, std::log(7.0)}), 1.0, "t");
    CHECK(map_model(qp) == 1);
    const auto tie = build_from_risks(singleton_space(2), table({0.3, 0.3}), 1.0, "t");
    CHECK(map_model(tie) == 0);
    CHECK(model_masses(selection_posterior(tie))[0] == 1.0);
    CHECK(tv_distance(selection_posterior(qp), oracle_posterior(qp)) == 0.0);
}

TEST_CASE("grouped true set selects as one mixture model") {
    auto s3 = singleton_space(3, {1, 2});
    const auto qp = build_from_risks(s3, table({0.0, std::log(1.5), std::log(1.5)}), 1.0, "t");
    // masses 3/7, 2/7, 2/7: model 0 wins singly, the true pair wins as a unit
    CHECK(map_model(qp) == 0);
    CHECK(map_selection(qp) == ModelSet{1, 2});
    CHECK(tv_distance(selection_posterior(qp), oracle_posterior(qp)) == 0.0);
}

TEST_CASE("oracle posterior") {
    auto s2 = singleton_space(2);
    const auto qp = build_from_risks(s2, table({0.0, std::log(9.0)}), 1.0, "t");
    CHECK(model_probability(qp, {0}) == doctest::Approx(0.9));
    CHECK(oracle_posterior(qp).weight(0) == 1.0);
    auto all = singleton_space(2, {0, 1});
    const auto qa = build_from_risks(all, table({0.0, std::log(9.0)}), 1.0, "t");
    CHECK(tv_distance(oracle_posterior(qa), qa.pi) == 0.0);
}

TEST_CASE("zero prior weight gives zero posterior probability") {
    auto sp = make_space({point_model(0, 0.0, 1.0), point_model(1, 1.0, 0.0)});
    const auto qp = build_from_risks(sp, table({1.0, 0.0}), 10.0, "t");
    CHECK(model_probability(qp, {1}) == 0.0);
}

TEST_CASE("conditional stays defined when the mass underflows") {
    auto s2 = singleton_space(2);
    const auto qp = build_from_risks(s2, table({10.0, 0.0}), 1000.0, "t");
    CHECK(model_probability(qp, {0}) == 0.0);
    CHECK(oracle_posterior(qp).weight(0) == 1.0);
}

TEST_CASE("mean decomposition") {
    auto sp = make_space({interval_model(0, -1, 1, 12), interval_model(1, 0.5, 2, 9)});
    std::vector<double> r(sp->total_cells());
    for (std::size_t c = 0; c < r.size(); ++c) r[c] = std::sin(static_cast<double>(c));
    const auto qp = build_from_risks(sp, table(r), 2.0, "t");
    const auto md = mean_decomposition(qp);
    const double p1 = model_probability(qp, {1});
    const double direct = p1 * (mean(conditional(qp, {1}))[0] - mean(oracle_posterior(qp))[0]);
    CHECK(md.lhs[0] == doctest::Approx(direct).epsilon(1e-12));
    CHECK(md.residual <= 1e-12);

    auto all = make_space({interval_model(0, -1, 1, 12), interval_model(1, 0.5, 2, 9)}, {0, 1});
    const auto q2 = build_from_risks(all, table(r), 2.0, "t");
    const auto m2 = mean_decomposition(q2);
    CHECK(m2.lhs[0] == 0.0);
    CHECK(m2.rhs_total[0] == 0.0);
}

TEST_CASE("property: misselection identity, pairwise TV bound and mean identities on random risks") {
    Rng rng(21);
    auto sp = make_space({interval_model(0, -1, 1, 7), point_model(1, 0.4), interval_model(2, 0, 3, 5)}, {0});
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> rn(sp->total_cells()), r(sp->total_cells());
        for (std::size_t c = 0; c < rn.size(); ++c) {
            r[c] = rng.uniform(0, 2);
            rn[c] = r[c] + 0.1 * rng.normal();
        }
        const double lam = std::exp(rng.uniform(-2, 5));
        const auto qp = build_from_risks(sp, {rn, r}, lam, "rand");
        const double miss = misselection_probability(qp);
        const auto o = oracle_posterior(qp);
        const auto s = selection_posterior(qp);
        REQUIRE(std::abs(tv_distance(qp.pi, o) - miss) <= 1e-12);
        const double worst = std::max({tv_distance(qp.pi, o), tv_distance(qp.pi, s), tv_distance(s, o)});
        REQUIRE(worst <= 2.0 * miss + 1e-12);
        REQUIRE(model_probability(qp, {map_model(qp)}) >= model_probability(qp, sp->true_ids()));
        REQUIRE(mean_decomposition(qp).residual <= 1e-10);
    }
}

TEST_CASE("posterior concentrates with n") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioId::ClassicalNested;
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        cfg.seed = seed;
        cfg.n = 10;
        const auto a = make_scenario(cfg);
        const auto qa = build(a.space, a.pair, a.lambda, a.data);
        cfg.n = 1000;
        const auto b = make_scenario(cfg);
        const auto qb = build(b.space, b.pair, b.lambda, b.data);
        wins += tv_distance(qb.pi, qb.prior) > tv_distance(qa.pi, qa.prior) ? 1 : 0;
    }
    CHECK(wins == 10);
}

TEST_CASE("metropolis agrees with quadrature") {
    SUBCASE("single model") {
        auto sp = make_space({interval_model(0, -1, 1, 64)});
        const auto pair = quadratic_risk({0.2}, 1.0);
        const auto qp = build(sp, pair, 100.0, Dataset{});
        const auto mc = metropolis_check(qp, pair, Dataset{}, 100000, 4);
        CHECK(mc.tv_to_grid <= 0.05);
        CHECK(mc.model_prob_mcmc[0] == 1.0);
    }
    SUBCASE("tiny lambda samples the prior") {
        auto sp = make_space({interval_model(0, -1, 1, 16, 1.0), interval_model(1, 2, 3, 16, 3.0)});
        const auto pair = quadratic_risk({0.0}, 1.0);
        const auto qp = build(sp, pair, 1e-12, Dataset{});
        const auto mc = metropolis_check(qp, pair, Dataset{}, 100000, 5);
        // effective sample size is well below the step count; 0.02 covers it
        CHECK(std::abs(mc.model_prob_mcmc[1] - 0.75) <= 0.02);
    }
    SUBCASE("two separated models") {
        auto sp = make_space({interval_model(0, -1, 0, 32), interval_model(1, 0.5, 1.5, 32)});
        const auto pair = quadratic_risk({0.25}, 4.0);
        const auto qp = build(sp, pair, 10.0, Dataset{});
        const auto mc = metropolis_check(qp, pair, Dataset{}, 100000, 6);
        const auto grid = model_masses(qp.pi);
        CHECK(std::abs(mc.model_prob_mcmc[0] - grid[0]) <= 0.03);
    }
    SUBCASE("pinned model next to a free one") {
        auto sp = make_space({point_model(0, 0.0), interval_model(1, -1, 1, 64)});
        const auto pair = quadratic_risk({0.0}, 1.0);
        const auto qp = build(sp, pair, 100.0, Dataset{});
        const auto mc = metropolis_check(qp, pair, Dataset{}, 100000, 8);
        CHECK(std::abs(mc.model_prob_mcmc[0] - model_masses(qp.pi)[0]) <= 0.02);
    }
    SUBCASE("too few steps") {
        auto sp = make_space({interval_model(0, -1, 1, 8)});
        const auto pair = quadratic_risk({0.0}, 1.0);
        const auto qp = build(sp, pair, 1.0, Dataset{});
        CHECK_THROWS(metropolis_check(qp, pair, Dataset{}, 100, 1));
    }
}
