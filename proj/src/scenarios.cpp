#include "oblab/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include "oblab/errors.hpp"
#include "oblab/format.hpp"
#include "oblab/numerics.hpp"
#include "oblab/rng.hpp"

namespace oblab {

namespace {

struct ScenarioInfo {
    ScenarioId id;
    const char* name;
    const char* description;
};

const ScenarioInfo kScenarios[] = {
    {ScenarioId::ClassicalNested, "classical-nested",
     "Gaussian location, Theta0={0} inside Theta1=[-1,1]; theta0=0.4 (truth in Theta1) or 0 (null)"},
    {ScenarioId::SeparatedSpaces, "separated-spaces",
     "Gaussian location, true box [0,1] and a wrong box at set distance delta=0.5"},
    {ScenarioId::PenalizedNested, "penalized-nested",
     "classical-nested null variant with complexity penalty gamma_pen * d_j"},
    {ScenarioId::CubicRoot, "cubic-root",
     "maximum-score indicator risk, x uniform on [-1,1]^2, logistic noise, theta0=0.5, lambda=n^0.5"},
    {ScenarioId::PartialId, "partial-id",
     "interval-bound moment inequalities, Omega=[0.3,0.4]x[-0.2,0.6], Theta1={0}x[-1,1], "
     "Theta2=[-1,1]^2, Theta3=[-1,1]x{0}, lambda=0.5n"},
};

const ScenarioInfo& info(ScenarioId id) {
    for (const auto& s : kScenarios)
        if (s.id == id) return s;
    throw UnknownScenario("unknown scenario id");
}

Model make_model(ModelId id, std::string label, std::vector<Axis> axes, double weight = 1.0) {
    Model m;
    m.id = id;
    m.label = std::move(label);
    m.box = ParameterBox(std::move(axes));
    m.prior_weight = weight;
    return m;
}

std::vector<int> free_dims(const std::vector<Model>& models) {
    std::vector<int> d;
    for (const auto& m : models) d.push_back(static_cast<int>(m.box.free_dimension()));
    return d;
}

}  // namespace

std::string to_string(ScenarioId id) { return info(id).name; }

ScenarioId parse_scenario(const std::string& name) {
    for (const auto& s : kScenarios)
        if (name == s.name) return s.id;
    throw UnknownScenario("unknown scenario '" + name + "'");
}

const std::vector<ScenarioId>& all_scenarios() {
    static const std::vector<ScenarioId> ids{ScenarioId::ClassicalNested, ScenarioId::SeparatedSpaces,
                                             ScenarioId::PenalizedNested, ScenarioId::CubicRoot,
                                             ScenarioId::PartialId};
    return ids;
}

std::string describe(ScenarioId id) { return info(id).description; }

// ---------------------------------------------------------------------------

LambdaRule LambdaRule::parse(const std::string& raw) {
    std::string text;
    for (char ch : raw)
        if (!std::isspace(static_cast<unsigned char>(ch))) text.push_back(ch);
    static const std::regex number(R"(^[0-9]*\.?[0-9]+([eE][-+]?[0-9]+)?$)");
    static const std::regex power_rule(R"(^(?:([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\*)?n(?:\^([-+]?[0-9]*\.?[0-9]+))?$)");
    std::smatch m;
    LambdaRule r;
    if (std::regex_match(text, number)) {
        r.constant = true;
        r.coef = std::stod(text);
        r.power = 0.0;
    } else if (std::regex_match(text, m, power_rule)) {
        r.coef = m[1].matched ? std::stod(m[1].str()) : 1.0;
        r.power = m[2].matched ? std::stod(m[2].str()) : 1.0;
    } else {
        throw ConfigError("cannot parse lambda_rule '" + raw + "' (expected forms: n, c*n, n^p, c*n^p, or a constant)");
    }
    if (!(r.coef > 0.0)) throw ConfigError("lambda_rule must evaluate positive");
    return r;
}

double LambdaRule::evaluate(std::size_t n) const {
    if (constant) return coef;
    return coef * std::pow(static_cast<double>(n), power);
}

std::string LambdaRule::text() const {
    if (constant) return format_double(coef);
    std::string s;
    if (coef != 1.0) s += format_double(coef) + "*";
    s += "n";
    if (power != 1.0) s += "^" + format_double(power);
    return s;
}

const std::map<std::string, double>& scenario_defaults(ScenarioId id) {
    static const std::map<ScenarioId, std::map<std::string, double>> defaults{
        {ScenarioId::ClassicalNested, {{"theta0", 0.4}, {"sigma", 1.0}, {"noise_sd", 1.0}, {"gamma_pen", 0.0}}},
        {ScenarioId::SeparatedSpaces,
         {{"theta0", 0.25}, {"delta", 0.5}, {"sigma", 1.0}, {"noise_sd", 1.0}, {"gamma_pen", 0.0}}},
        {ScenarioId::PenalizedNested, {{"theta0", 0.0}, {"sigma", 1.0}, {"noise_sd", 1.0}, {"gamma_pen", 0.05}}},
        {ScenarioId::CubicRoot,
         {{"theta0", 0.5},
          {"box_lo", -1.5},
          {"box_hi", 2.5},
          {"wrong_point", -1.0},
          {"m_oracle", 0.0},
          {"gamma_pen", 0.0}}},
        {ScenarioId::PartialId,
         {{"el1", 0.3},
          {"eu1", 0.4},
          {"el2", -0.2},
          {"eu2", 0.6},
          {"spread", 0.25},
          {"v_scale", 1.0},
          {"tol_compat", 1e-8},
          {"regroup", 1.0},
          {"gamma_pen", 0.0}}},
    };
    return defaults.at(id);
}

LambdaRule ScenarioConfig::effective_lambda_rule() const {
    if (lambda_rule) return *lambda_rule;
    LambdaRule r;
    switch (scenario) {
        case ScenarioId::CubicRoot: r.power = 0.5; break;
        case ScenarioId::PartialId: r.coef = 0.5; break;
        default: break;
    }
    return r;
}

double ScenarioConfig::override_or(const std::string& key, double fallback) const {
    const auto it = overrides.find(key);
    return it == overrides.end() ? fallback : it->second;
}

void ScenarioConfig::validate() const {
    if (n < 10) throw ConfigError("n must be >= 10");
    if (grid_resolution < 8) throw ConfigError("grid_resolution must be >= 8");
    const double lam = lambda();
    if (!(lam > 0.0) || !std::isfinite(lam)) throw ConfigError("lambda_rule must evaluate positive");
    const auto& allowed = scenario_defaults(scenario);
    for (const auto& [k, v] : overrides) {
        if (!allowed.count(k))
            throw ConfigError("unknown override '" + k + "' for scenario " + to_string(scenario));
        if (!std::isfinite(v)) throw ConfigError("override '" + k + "' must be finite");
    }
    if (override_or("gamma_pen", 0.0) < 0.0) throw ConfigError("gamma_pen must be >= 0");
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> identification_region(const RiskPair& pair, const ParameterBox& box, double tol_compat,
                                               ModelId j) {
    std::vector<std::size_t> out;
    std::vector<double> theta(box.dimension());
    for (std::size_t c = 0; c < box.cell_count(); ++c) {
        box.cell_center(c, theta);
        if (pair.theoretical_base(j, theta) <= tol_compat) out.push_back(c);
    }
    return out;
}

CompatibilityReport compatibility_analysis(const RiskPair& pair, const ModelSpace& space, double tol_compat) {
    CompatibilityReport rep;
    rep.inf_theoretical_risk.assign(space.size(), std::numeric_limits<double>::infinity());
    for (const auto& m : space.models()) {
        std::vector<double> theta(m.box.dimension());
        for (std::size_t c = 0; c < m.box.cell_count(); ++c) {
            m.box.cell_center(c, theta);
            rep.inf_theoretical_risk[m.id] = std::min(rep.inf_theoretical_risk[m.id], pair.theoretical_base(m.id, theta));
        }
    }
    rep.g = std::numeric_limits<double>::infinity();
    for (const auto& m : space.models()) {
        const bool ok = rep.inf_theoretical_risk[m.id] <= tol_compat;
        rep.compatible.push_back(ok);
        if (ok) {
            rep.compatible_set.push_back(m.id);
        } else {
            rep.g = std::min(rep.g, rep.inf_theoretical_risk[m.id]);
            rep.g_defined = true;
        }
    }
    return rep;
}

ModelSpace regroup_mixture_true_model(const ModelSpace& space, const CompatibilityReport& report) {
    if (report.compatible_set.empty()) throw EmptyCompatibleSet("no model is compatible with the identification region");
    return space.with_true_ids(report.compatible_set);
}

double true_prior_weight(const ModelSpace& space) {
    CompensatedSum s;
    for (ModelId j : space.true_ids()) s.add(space.model(j).prior_weight);
    return s.value();
}

GridMeasure limiting_posterior_target(SpacePtr space, const std::vector<bool>& region_mask) {
    if (region_mask.size() != space->total_cells()) throw SupportMismatch("region mask does not match the grid");
    const GridMeasure prior = prior_measure(space);
    std::vector<double> w(space->total_cells(), 0.0);
    for (std::size_t c = 0; c < w.size(); ++c)
        if (region_mask[c] && space->is_true(space->model_of_cell(c))) w[c] = prior.weight(c);
    if (!(compensated_sum(w) > 0.0)) throw ZeroMass("identification region carries no prior mass");
    return normalize(GridMeasure(std::move(space), std::move(w)));
}

double jaccard(std::vector<std::size_t> a, std::vector<std::size_t> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::size_t> inter, uni;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
    if (uni.empty()) return 1.0;
    return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

// ---------------------------------------------------------------------------

Experiment make_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const auto& defs = scenario_defaults(cfg.scenario);
    auto get = [&](const std::string& key) { return cfg.override_or(key, defs.at(key)); };
    const std::size_t res = cfg.grid_resolution;
    const std::uint64_t data_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(cfg.scenario));

    std::vector<Model> models;
    ModelSet truth;
    std::optional<RiskPair> pair;
    Dataset data;
    std::optional<CompatibilityReport> compat;

    switch (cfg.scenario) {
        case ScenarioId::ClassicalNested:
        case ScenarioId::PenalizedNested: {
            const double theta0 = get("theta0");
            models.push_back(make_model(0, "Theta0={0}", {Axis::point(0.0)}));
            models.push_back(make_model(1, "Theta1=[-1,1]", {Axis::interval(-1.0, 1.0, res)}));
            truth = {theta0 == 0.0 ? 0 : 1};
            const GaussianDesign design{{theta0}, get("noise_sd")};
            pair = gaussian_nll_risk(get("sigma"), design);
            data = generate_gaussian(design, cfg.n, data_seed);
            break;
        }
        case ScenarioId::SeparatedSpaces: {
            const double delta = get("delta");
            if (!(delta > 0.0)) throw ConfigError("delta must be positive");
            const double theta0 = get("theta0");
            if (theta0 < 0.0 || theta0 > 1.0) throw ConfigError("theta0 must lie in the true box [0,1]");
            models.push_back(make_model(0, "Theta0=[0,1]", {Axis::interval(0.0, 1.0, res)}));
            models.push_back(make_model(1, "Theta1=[-delta-0.5,-delta]", {Axis::interval(-delta - 0.5, -delta, res)}));
            truth = {0};
            const GaussianDesign design{{theta0}, get("noise_sd")};
            pair = gaussian_nll_risk(get("sigma"), design);
            data = generate_gaussian(design, cfg.n, data_seed);
            break;
        }
        case ScenarioId::CubicRoot: {
            const IndicatorDesign design{get("theta0")};
            const double lo = get("box_lo"), hi = get("box_hi");
            if (!(lo < design.theta0 && design.theta0 < hi)) throw ConfigError("box must contain theta0");
            models.push_back(make_model(0, "theta free", {Axis::interval(lo, hi, res)}));
            models.push_back(make_model(1, "theta pinned", {Axis::point(get("wrong_point"))}));
            truth = {0};
            pair = indicator_risk(design);
            const auto m_oracle = static_cast<std::size_t>(get("m_oracle"));
            if (m_oracle > 0) {
                pair = with_monte_carlo_oracle(
                    *pair, [design](std::size_t n, std::uint64_t s) { return generate_indicator(design, n, s); },
                    m_oracle, 0x0badc0ffee5eedULL);
            }
            data = generate_indicator(design, cfg.n, data_seed);
            break;
        }
        case ScenarioId::PartialId: {
            const IntervalDesign design{get("el1"), get("eu1"), get("el2"), get("eu2"), get("spread")};
            models.push_back(make_model(0, "Theta1={0}x[-1,1]", {Axis::point(0.0), Axis::interval(-1.0, 1.0, res)}));
            models.push_back(
                make_model(1, "Theta2=[-1,1]x[-1,1]", {Axis::interval(-1.0, 1.0, res), Axis::interval(-1.0, 1.0, res)}));
            models.push_back(make_model(2, "Theta3=[-1,1]x{0}", {Axis::interval(-1.0, 1.0, res), Axis::point(0.0)}));
            const double v = get("v_scale");
            if (!(v > 0.0)) throw ConfigError("v_scale must be positive");
            pair = moment_inequality_risk(WeightMatrix::diag(std::vector<double>(4, v)), design);
            data = generate_interval(design, cfg.n, data_seed);
            const ModelSpace provisional(models, {1});
            compat = compatibility_analysis(*pair, provisional, get("tol_compat"));
            if (get("regroup") != 0.0) {
                if (compat->compatible_set.empty())
                    throw EmptyCompatibleSet("no model is compatible with the identification region");
                truth = compat->compatible_set;
            } else {
                truth = {1};
            }
            break;
        }
    }
    if (const double gp = get("gamma_pen"); gp > 0.0) pair = add_penalty(*pair, gp, free_dims(models));

    Experiment ex{cfg, std::make_shared<const ModelSpace>(std::move(models), std::move(truth)),
                  std::move(*pair), std::move(data), cfg.lambda(), std::move(compat), {}};
    if (cfg.scenario == ScenarioId::PartialId) {
        const double tol = get("tol_compat");
        const auto theo = theoretical_on_grid(ex.pair.without_penalty(), *ex.space);
        ex.region_mask.resize(theo.size());
        for (std::size_t c = 0; c < theo.size(); ++c) ex.region_mask[c] = theo[c] <= tol;
    }
    return ex;
}

CounterexampleResult counterexample_run(const ScenarioConfig& base) {
    if (base.scenario != ScenarioId::PartialId) throw InvalidArgument("counterexample needs the partial-id scenario");
    ScenarioConfig cfg = base;
    if (cfg.override_or("gamma_pen", 0.0) <= 0.0) cfg.overrides["gamma_pen"] = 0.15;
    // selection among the three boxes, not the grouped mixture
    cfg.overrides["regroup"] = 0.0;
    const Experiment ex = make_scenario(cfg);
    const QuasiPosterior qp = build(ex.space, ex.pair, ex.lambda, ex.data);

    CounterexampleResult out;
    out.penalized_map = map_model(qp);
    out.model_probabilities = model_masses(qp.pi);
    out.misses_truth_at = {0.0, 0.5};
    const auto em = interval_population_moments(out.misses_truth_at,
                                                IntervalDesign{cfg.override_or("el1", 0.3), cfg.override_or("eu1", 0.4),
                                                               cfg.override_or("el2", -0.2), cfg.override_or("eu2", 0.6),
                                                               cfg.override_or("spread", 0.25)});
    out.truth_in_region = std::all_of(em.begin(), em.end(), [](double x) { return x >= 0.0; });
    // moments 1 and 3 bound the second coordinate
    out.second_in_region_projection = em[1] >= 0.0 && em[3] >= 0.0;
    out.truth_in_map_model = ex.space->model(out.penalized_map).box.contains(out.misses_truth_at);
    return out;
}

}  // namespace oblab
