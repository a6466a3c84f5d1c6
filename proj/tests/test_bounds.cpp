#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oblab/bounds.hpp"
#include "oblab/errors.hpp"
#include "oblab/numerics.hpp"
#include "oblab/scenarios.hpp"

using namespace oblab;
using namespace testutil;

TEST_CASE("gap") {
    auto nested = make_space({point_model(0, 0.0), interval_model(1, -1, 1, 33)});
    const auto pair = quadratic_risk({0.0}, 1.0);
    CHECK(gap(pair, *nested) == 0.0);

    const auto pen = add_penalty(pair, 0.05, {0, 1});
    CHECK(gap(pen, *nested) >= 0.05);

    ScenarioConfig cfg;
    cfg.scenario = ScenarioId::SeparatedSpaces;
    cfg.overrides["theta0"] = 0.0;
    const auto ex = make_scenario(cfg);
    // C = (sigma^2 + (theta - theta0)^2) / 2, curvature 1/2, set distance 0.5
    CHECK(gap(ex.pair, *ex.space) == doctest::Approx(0.5 * 0.25).epsilon(0.05));

    auto only_true = make_space({interval_model(0, -1, 1, 8)});
    CHECK(std::isinf(gap(pair, *only_true)));
}

TEST_CASE("r term") {
    auto sp = make_space({interval_model(0, -1, 1, 2001)});
    const auto pair = quadratic_risk({0.0}, 1.0);
    // mpmath quadrature of -ln(0.5 * int exp(-50 t^2)) / 100
    CHECK(r_term(build(sp, pair, 100.0, Dataset{})) == doctest::Approx(0.0207679374034932).epsilon(1e-6));
    double prev = INFINITY;
    for (double lam : {50.0, 100.0, 200.0, 400.0}) {
        const double r = r_term(build(sp, pair, lam, Dataset{}));
        CHECK(r < prev);
        prev = r;
    }
    auto flat = make_space({interval_model(0, -1, 1, 16)});
    const auto qp = build_from_risks(flat, {std::vector<double>(16, 1.0), std::vector<double>(16, 1.0)}, 10.0, "c");
    CHECK(r_term(qp) == 0.0);
}

TEST_CASE("r upper") {
    auto flat = make_space({interval_model(0, -1, 1, 16)});
    const auto qp = build_from_risks(flat, {std::vector<double>(16, 1.0), std::vector<double>(16, 1.0)}, 10.0, "c");
    const std::vector<double> a{0.3, 0.1, 0.7};
    CHECK(r_upper(qp, a) == doctest::Approx(0.1));
    CHECK(r_upper(qp, std::vector<double>{5.0}) == doctest::Approx(5.0));

    auto sp = make_space({interval_model(0, -1, 1, 257)});
    const auto pair = quadratic_risk({0.0}, 1.0);
    for (double lam : {10.0, 100.0, 1000.0}) {
        const auto q = build(sp, pair, lam, Dataset{});
        CHECK(r_term(q) <= r_upper(q, default_a_grid(*sp, lam)) + kBoundTol);
    }
    CHECK_THROWS_AS(r_upper(qp, std::vector<double>{-1.0}), InvalidArgument);
    // the minimizing cell carries no prior mass
    auto split = make_space({interval_model(0, -1, 1, 4), point_model(1, 2.0, 0.0)});
    const std::vector<double> r{1.0, 1.0, 1.0, 1.0, 0.0};
    const auto excluded = build_from_risks(split, {r, r}, 10.0, "s");
    CHECK_THROWS_AS(r_upper(excluded, std::vector<double>{0.5}), AllMassExcluded);
    CHECK(r_upper(excluded, std::vector<double>{2.0}) == doctest::Approx(2.0));
}

TEST_CASE("u term") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioId::ClassicalNested;
    auto ex = make_scenario(cfg);
    const auto exact = build(ex.space, plug_in(ex.pair), ex.lambda, ex.data);
    CHECK(u_term(exact) == 0.0);

    std::vector<double> small, large;
    for (std::uint64_t s = 1; s <= 50; ++s) {
        cfg.seed = s;
        cfg.n = 100;
        auto a = make_scenario(cfg);
        small.push_back(std::abs(u_term(build(a.space, a.pair, a.lambda, a.data))));
        cfg.n = 10000;
        auto b = make_scenario(cfg);
        large.push_back(std::abs(u_term(build(b.space, b.pair, b.lambda, b.data))));
    }
    CHECK(median(large) < median(small));
}

TEST_CASE("prop3 report") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioId::SeparatedSpaces;
    cfg.n = 4000;
    auto ex = make_scenario(cfg);
    const auto b = prop3_check(build(ex.space, ex.pair, ex.lambda, ex.data));
    CHECK(b.inequality_holds);
    CHECK(b.bound_active);
    CHECK(b.rhs_bound < 0.0);

    cfg.scenario = ScenarioId::ClassicalNested;
    cfg.overrides["theta0"] = 0.0;
    cfg.grid_resolution = 65;  // odd, so the free model has a cell at 0
    auto nested = make_scenario(cfg);
    const auto bn = prop3_check(build(nested.space, nested.pair, nested.lambda, nested.data));
    CHECK(bn.gamma == 0.0);
    CHECK_FALSE(bn.bound_active);
    CHECK(bn.rhs_bound >= 0.0);
    CHECK(bn.inequality_holds);

    auto s2 = make_space({point_model(0, 0.0), point_model(1, 1.0, 0.0)});
    const auto q = build_from_risks(s2, {{0.0, 10.0}, {0.0, 10.0}}, 1000.0, "t");
    const auto bz = prop3_check(q);
    CHECK(bz.lhs_log_misselect == kNegInf);
    CHECK(bz.inequality_holds);
}

TEST_CASE("riskbd") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioId::SeparatedSpaces;
    cfg.n = 1000;
    auto ex = make_scenario(cfg);
    const auto qp = build(ex.space, ex.pair, ex.lambda, ex.data);
    const auto [lo, hi] = std::minmax_element(qp.theoretical_risk.begin(), qp.theoretical_risk.end());
    CHECK(riskbd_check(qp, (*hi - *lo) * 2.0).lhs == 0.0);
    const auto near_zero = riskbd_check(qp, 1e-15);
    CHECK(near_zero.vacuous);
    CHECK(near_zero.holds);
    for (std::uint64_t s = 1; s <= 50; ++s) {
        cfg.seed = s;
        auto e = make_scenario(cfg);
        const auto q = build(e.space, e.pair, e.lambda, e.data);
        REQUIRE(riskbd_check(q, 0.5 * gap(q.theoretical_risk, *q.space)).holds);
    }
}

TEST_CASE("gibbslim") {
    auto s3 = singleton_space(3);
    const auto same = build_from_risks(s3, {{0.1, 0.5, 0.9}, {0.1, 0.5, 0.9}}, 3.0, "t");
    const auto one = gibbslim_check(same, std::vector<double>{1, 1, 1});
    CHECK(one.lhs == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(one.rhs >= 0.0);
    for (const auto& e : gibbslim_event_checks(same)) {
        CHECK(e.holds);
        CHECK(e.lhs <= 0.5 * e.lhs + 1e-15);
    }
    const auto zero = build_from_risks(s3, {{0.0, 50.0, 50.0}, {0.0, 50.0, 50.0}}, 100.0, "t");
    CHECK_THROWS_AS(gibbslim_check(zero, std::vector<double>{0, 0, 0}), ZeroMass);

    Rng rng(31);
    auto sp = make_space({interval_model(0, -1, 1, 9), point_model(1, 0.5), interval_model(2, 1, 2, 4)});
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> rn(sp->total_cells()), r(sp->total_cells()), h(sp->total_cells());
        for (std::size_t c = 0; c < r.size(); ++c) {
            r[c] = rng.uniform(0, 1);
            rn[c] = r[c] + 0.2 * rng.normal();
            h[c] = rng.uniform() < 0.3 ? 0.0 : rng.exponential();
        }
        h[0] = 1.0;
        const auto qp = build_from_risks(sp, {rn, r}, std::exp(rng.uniform(-1, 4)), "rand");
        REQUIRE(gibbslim_check(qp, h).holds);
    }
}

TEST_CASE("msrisk") {
    auto single = make_space({interval_model(0, -1, 1, 8)});
    const auto q = build(single, quadratic_risk({0.0}, 1.0), 10.0, Dataset{});
    CHECK(msrisk_check(q).lhs == 0.0);
    CHECK(msrisk_check(q).holds);
}

TEST_CASE("property: bound chain on every scenario and seed") {
    for (auto id : all_scenarios())
        for (std::uint64_t s = 1; s <= 5; ++s) {
            ScenarioConfig cfg;
            cfg.scenario = id;
            cfg.seed = s;
            cfg.n = 500;
            cfg.grid_resolution = 32;
            auto ex = make_scenario(cfg);
            const auto qp = build(ex.space, ex.pair, ex.lambda, ex.data);
            const auto b = prop3_check(qp);
            INFO(to_string(id), " seed ", s);
            REQUIRE(b.r >= 0.0);
            REQUIRE(b.u <= 0.0);
            REQUIRE(b.inequality_holds);
            REQUIRE(b.u_uniform_holds);
            REQUIRE(b.r_upper_holds);
            REQUIRE(b.gibbslim_margin >= -kBoundTol);
            REQUIRE(msrisk_check(qp).holds);
        }
}

TEST_CASE("gap r and u are stable under grid refinement") {
    for (auto id : {ScenarioId::SeparatedSpaces, ScenarioId::PenalizedNested}) {
        ScenarioConfig cfg;
        cfg.scenario = id;
        cfg.n = 1000;
        cfg.grid_resolution = 64;
        auto a = make_scenario(cfg);
        const auto ba = prop3_check(build(a.space, a.pair, a.lambda, a.data));
        cfg.grid_resolution = 128;
        auto b = make_scenario(cfg);
        const auto bb = prop3_check(build(b.space, b.pair, b.lambda, b.data));
        INFO(to_string(id));
        CHECK(std::abs(bb.gamma - ba.gamma) <= 0.1 * std::abs(ba.gamma));
        CHECK(std::abs(bb.r - ba.r) <= 0.1 * std::abs(ba.r));
        CHECK(std::abs(bb.u - ba.u) <= 0.1 * std::abs(ba.u) + 1e-12);
    }
}
