#include <cmath>
#include "doctest.h"
#include "oblab/config.hpp"
#include "oblab/errors.hpp"
#include "oblab/numerics.hpp"
#include "oblab/runner.hpp"

using namespace oblab;

TEST_CASE("run report passes every check and carries its config") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioId::ClassicalNested;
    cfg.n = 500;
    const auto rep = run_experiment(cfg);
    CHECK(rep.all_pass());
    CHECK(rep.gibbslim_checked > 0);
    CHECK(rep.prop1_residual <= 1e-12);
    const auto j = to_json(rep);
    CHECK(j["all_pass"].get<bool>());
    CHECK(j.contains("timing"));
    CHECK_FALSE(to_json(rep, false).contains("timing"));
    CHECK(j["bic"]["applicable"].get<bool>());

    // re-running from the echoed config reproduces the numbers
    const auto again = run_experiment(parse_config(j["config"]["text"].get<std::string>()));
    CHECK(to_json(again, false).dump() == to_json(rep, false).dump());
}

TEST_CASE("partial-id run disables bic and reports compatibility") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioId::PartialId;
    cfg.grid_resolution = 32;
    const auto rep = run_experiment(cfg);
    const auto j = to_json(rep);
    CHECK_FALSE(j["bic"]["applicable"].get<bool>());
    CHECK(j["compatibility"]["compatible_set"] == nlohmann::json::array({1, 2}));
    CHECK(rep.all_pass());
}

TEST_CASE("non-finite values serialize as strings") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioId::SeparatedSpaces;
    cfg.n = 4000;
    auto rep = run_experiment(cfg);
    // finite in the log domain even though the mass itself underflows
    CHECK(std::isfinite(rep.bounds.lhs_log_misselect));
    rep.bounds.lhs_log_misselect = -INFINITY;
    const auto j = to_json(rep);
    CHECK(j["prop3"]["lhs_log_misselect"] == "-inf");
    const auto csv = json_to_csv(j);
    CHECK(csv.find("/prop3/lhs_log_misselect,-inf") != std::string::npos);
}

TEST_CASE("report is identical at any thread count") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioId::PartialId;
    cfg.n = 2000;
    set_thread_count(1);
    const auto one = to_json(run_experiment(cfg), false).dump();
    set_thread_count(4);
    const auto four = to_json(run_experiment(cfg), false).dump();
    set_thread_count(1);
    CHECK(one == four);
}

TEST_CASE("sweep rows") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioId::ClassicalNested;
    SweepSpec spec;
    spec.axis = SweepAxis::N;
    spec.values = {250, 1000, 4000};
    for (std::uint64_t s = 1; s <= 50; ++s) spec.seeds.push_back(s);
    set_thread_count(4);
    const auto rows = run_sweep(cfg, spec);
    set_thread_count(1);
    CHECK(rows.size() == 150);
    CHECK(sweep_csv(rows, 2) == sweep_csv(run_sweep(cfg, spec), 2));
    std::vector<double> med;
    for (std::size_t v = 0; v < 3; ++v) {
        std::vector<double> m;
        for (std::size_t s = 0; s < 50; ++s) m.push_back(rows[v * 50 + s].misselect);
        med.push_back(median(m));
    }
    CHECK(med[1] <= med[0]);
    CHECK(med[2] <= med[1]);

    // a single row agrees with the full run
    SweepSpec single{SweepAxis::Seed, {3}, {}};
    const auto r1 = run_sweep(cfg, single);
    cfg.seed = 3;
    const auto full = run_experiment(cfg);
    REQUIRE(r1.size() == 1);
    CHECK(r1[0].misselect == full.misselect);
    CHECK(r1[0].gamma == full.bounds.gamma);
    CHECK(r1[0].tv_pi_oracle == full.tv_pi_oracle);

    SweepSpec dup{SweepAxis::Seed, {5, 5}, {}};
    const auto d = run_sweep(cfg, dup);
    CHECK(sweep_csv({d[0]}, 2) == sweep_csv({d[1]}, 2));

    SweepSpec bad{SweepAxis::Resolution, {4, 16}, {1}};
    const auto br = run_sweep(cfg, bad);
    CHECK_FALSE(br[0].error.empty());
    CHECK(br[1].error.empty());
    CHECK_THROWS_AS(run_sweep(cfg, SweepSpec{SweepAxis::N, {}, {}}), ConfigError);
    CHECK_THROWS_AS(parse_axis("time"), ConfigError);
}

TEST_CASE("report summarises a sweep") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioId::SeparatedSpaces;
    SweepSpec spec{SweepAxis::N, {250, 1000, 4000}, {1, 2, 3, 4}};
    const auto csv = sweep_csv(run_sweep(cfg, spec), 2);
    const auto s = summarize_sweep_csv(csv);
    CHECK(s.groups.size() == 3);
    const auto files = series_files(s);
    REQUIRE(files.size() == 3);
    for (const auto& f : files) {
        const auto lines = std::count(f.contents.begin(), f.contents.end(), '\n');
        CHECK(lines == 4);
    }
    // constant column: gamma is fixed by the grid
    for (const auto& g : s.groups)
        for (const auto& c : g.columns)
            if (c.column == "gamma") {
                CHECK(c.median == c.q10);
                CHECK(c.median == c.q90);
            }
    CHECK_FALSE(summary_text(s).empty());
}

TEST_CASE("report rejects error-only input") {
    ScenarioConfig cfg;
    SweepSpec spec{SweepAxis::Resolution, {2, 4}, {1}};
    const auto csv = sweep_csv(run_sweep(cfg, spec), 2);
    CHECK_THROWS_AS(summarize_sweep_csv(csv), EmptyInput);
    CHECK_THROWS_AS(summarize_sweep_csv(""), EmptyInput);
    CHECK_THROWS_AS(summarize_sweep_csv("a,b\n1,2\n"), SchemaMismatch);
}
