#include <cmath>

#include "doctest.h"
#include "oblab/config.hpp"
#include "oblab/errors.hpp"
#include "oblab/format.hpp"

using namespace oblab;

TEST_CASE("format_double round-trips") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, 123456789.125}) CHECK(parse_double(format_double(x)) == x);
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(-INFINITY) == "-inf");
    CHECK(parse_double("-inf") == -INFINITY);
    CHECK_THROWS_AS(parse_double("1.5x"), ConfigError);
    CHECK_THROWS_AS(parse_double(""), ConfigError);
}

TEST_CASE("parse a full config") {
    const auto cfg = parse_config(
        "# comment line\n"
        "scenario = partial-id   # trailing comment\n"
        "n = 2000\n"
        "lambda_rule = 0.25*n\n"
        "seed = 9\n"
        "grid_resolution = 40\n"
        "\n"
        "[overrides]\n"
        "gamma_pen = 0.15\n");
    CHECK(cfg.scenario == ScenarioId::PartialId);
    CHECK(cfg.n == 2000);
    CHECK(cfg.lambda() == 500.0);
    CHECK(cfg.seed == 9);
    CHECK(cfg.grid_resolution == 40);
    CHECK(cfg.overrides.at("gamma_pen") == 0.15);
}

TEST_CASE("emit and parse round-trip") {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioId::CubicRoot;
    cfg.n = 1234;
    cfg.seed = 77;
    cfg.overrides["theta0"] = 0.3;
    const auto back = parse_config(emit_config(cfg));
    CHECK(back.scenario == cfg.scenario);
    CHECK(back.n == cfg.n);
    CHECK(back.seed == cfg.seed);
    CHECK(back.lambda() == cfg.lambda());
    CHECK(back.override_or("theta0", 0) == 0.3);
    CHECK(emit_config(back) == emit_config(cfg));
}

TEST_CASE("config errors name the line and field") {
    auto message = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return e.message();
        }
        return std::string("no error");
    };
    CHECK(message("scenario = classical-nested\nnn = 5\n") == "line 2, field 'nn': unknown key");
    CHECK(message("scenario = classical-nested\nn = ten\n").find("line 2, field 'n'") == 0);
    CHECK(message("scenario = bogus\n").find("line 1, field 'scenario'") == 0);
    CHECK(message("scenario = classical-nested\n[overrides]\ndelta = 1\n").find("line 3, field 'delta'") == 0);
    CHECK(message("scenario = classical-nested\njunk\n").find("line 2") == 0);
    CHECK(message("scenario = classical-nested\n[other]\n").find("line 2") == 0);
    CHECK(message("n = 100\n") == "missing required field 'scenario'");
    CHECK(message("scenario = classical-nested\nn = 3\n").find("n must be >= 10") != std::string::npos);
    CHECK(message("scenario = classical-nested\nlambda_rule = sqrt(n)\n").find("line 2, field 'lambda_rule'") == 0);
}
