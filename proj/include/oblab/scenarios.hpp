#pragma once

// Seeded experiment setups binding a data-generating process, a model
// space, a risk pair and a lambda rule.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oblab/quasiposterior.hpp"
#include "oblab/risks.hpp"

namespace oblab {

enum class ScenarioId { ClassicalNested, SeparatedSpaces, PenalizedNested, CubicRoot, PartialId };

std::string to_string(ScenarioId id);
ScenarioId parse_scenario(const std::string& name);  // throws UnknownScenario
const std::vector<ScenarioId>& all_scenarios();
std::string describe(ScenarioId id);

/// lambda = coef * n^power, or a positive constant. Text forms: "n", "0.5*n",
/// "n^0.5", "2*n^0.5", "100".
struct LambdaRule {
    double coef = 1.0;
    double power = 1.0;
    bool constant = false;

    static LambdaRule parse(const std::string& text);
    double evaluate(std::size_t n) const;
    std::string text() const;
};

struct ScenarioConfig {
    ScenarioId scenario = ScenarioId::ClassicalNested;
    std::size_t n = 1000;
    std::optional<LambdaRule> lambda_rule;  // scenario default when empty
    std::uint64_t seed = 1;
    std::size_t grid_resolution = 64;
    std::map<std::string, double> overrides;

    LambdaRule effective_lambda_rule() const;
    double lambda() const { return effective_lambda_rule().evaluate(n); }
    double override_or(const std::string& key, double fallback) const;
    /// Throws ConfigError on out-of-range fields or unknown override keys.
    void validate() const;
};

/// Override keys accepted by a scenario, with their defaults.
const std::map<std::string, double>& scenario_defaults(ScenarioId id);

struct CompatibilityReport {
    std::vector<double> inf_theoretical_risk;  // per model
    std::vector<bool> compatible;
    ModelSet compatible_set;
    double g = 0.0;      // min inf R over incompatible models
    bool g_defined = false;
};

struct Experiment {
    ScenarioConfig cfg;
    SpacePtr space;
    RiskPair pair;
    Dataset data;
    double lambda = 0.0;
    std::optional<CompatibilityReport> compatibility;
    std::vector<bool> region_mask;  // per global cell, partial-id only
};

Experiment make_scenario(const ScenarioConfig& cfg);

/// Local cells of the box with R(theta) <= tol_compat.
std::vector<std::size_t> identification_region(const RiskPair& pair, const ParameterBox& box, double tol_compat,
                                               ModelId j = 0);

CompatibilityReport compatibility_analysis(const RiskPair& pair, const ModelSpace& space, double tol_compat);

/// True set replaced by the compatible set; the prior on the union already
/// is the nu-weighted mixture, so weights and densities are unchanged.
ModelSpace regroup_mixture_true_model(const ModelSpace& space, const CompatibilityReport& report);

/// Total prior weight kappa_0 of the designated true set.
double true_prior_weight(const ModelSpace& space);

/// Prior restricted to true-model cells inside the region, renormalized.
GridMeasure limiting_posterior_target(SpacePtr space, const std::vector<bool>& region_mask);

double jaccard(std::vector<std::size_t> a, std::vector<std::size_t> b);

struct CounterexampleResult {
    ModelId penalized_map = 0;
    std::vector<double> misses_truth_at;
    bool truth_in_region = false;
    /// theta*_2 inside [EL_2, EU_2], the projection of the region on axis 2.
    bool second_in_region_projection = false;
    bool truth_in_map_model = false;
    std::vector<double> model_probabilities;
};

/// Penalized selection on the partial-id scenario; theta* = (0, 0.5).
CounterexampleResult counterexample_run(const ScenarioConfig& cfg);

}  // namespace oblab
