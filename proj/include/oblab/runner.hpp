#pragma once

// End-to-end execution of one configured experiment, seed/parameter sweeps
// and summaries of sweep output.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "oblab/bic.hpp"
#include "oblab/bounds.hpp"
#include "oblab/scenarios.hpp"

namespace oblab {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
    std::size_t gibbslim_samples = 100;
    bool bic = true;
    std::size_t metropolis_steps = 0;  // 0 disables the sampler cross-check
    std::size_t metropolis_chains = 3;
};

struct NamedCheck {
    std::string name;
    bool pass = true;
};

struct DiagnosticsReport {
    ScenarioConfig cfg;
    std::string config_text;
    double lambda = 0.0;
    std::string risk_tag;
    std::string theoretical_tag;
    std::size_t total_cells = 0;
    std::vector<std::string> model_labels;
    ModelSet true_ids;

    std::vector<double> model_probabilities;
    ModelId map_model = 0;
    double misselect = 0.0;  // 1 - pi(M0)

    double tv_pi_oracle = 0.0;
    double tv_pi_selection = 0.0;
    double tv_selection_oracle = 0.0;
    double prop1_residual = 0.0;
    double prop2_max_tv = 0.0;
    double prop2_bound = 0.0;

    BoundReport bounds;
    InequalityCheck msrisk;
    std::vector<double> riskbd_levels;
    std::vector<InequalityCheck> riskbd;
    std::size_t gibbslim_checked = 0;
    std::size_t gibbslim_violations = 0;
    double gibbslim_min_margin = 0.0;
    std::vector<InequalityCheck> gibbslim_events;

    MeanDecomposition mean;

    std::string limit_kind;
    double tv_to_limit = 0.0;

    std::optional<CompatibilityReport> compatibility;
    BicReport bic;
    RatioDiagnostics ratios;
    std::optional<MetropolisResult> metropolis;

    std::vector<NamedCheck> checks;
    double wall_time_s = 0.0;

    bool all_pass() const;
};

DiagnosticsReport run_experiment(const ScenarioConfig& cfg, const RunOptions& opts = {});

/// Timing lives under "timing"; every other field is a deterministic
/// function of the config.
nlohmann::json to_json(const DiagnosticsReport& report, bool include_timing = true);

/// Flattened "key,value" lines of a JSON document.
std::string json_to_csv(const nlohmann::json& doc);

enum class SweepAxis { N, Lambda, Seed, Resolution };
SweepAxis parse_axis(const std::string& name);  // throws ConfigError
std::string to_string(SweepAxis a);

struct SweepSpec {
    SweepAxis axis = SweepAxis::N;
    std::vector<double> values;
    std::vector<std::uint64_t> seeds;  // ignored for the seed axis
};

struct SweepRow {
    double axis_value = 0.0;
    std::uint64_t seed = 0;
    double lambda = 0.0;
    double misselect = 0.0;
    double tv_pi_oracle = 0.0;
    double tv_pi_selection = 0.0;
    double tv_selection_oracle = 0.0;
    double tv_to_limit = 0.0;
    double gamma = 0.0;
    double r = 0.0;
    double u = 0.0;
    double bound_rhs = 0.0;
    std::vector<double> ln_ratio;  // per model id
    std::string error;             // empty on success
};

/// Rows ordered by (value index, seed index) whatever the thread count.
std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const SweepSpec& spec);
std::string sweep_csv(const std::vector<SweepRow>& rows, std::size_t model_count);

struct ColumnSummary {
    std::string column;
    double median = 0.0;
    double q10 = 0.0;
    double q90 = 0.0;
};

struct GroupSummary {
    double axis_value = 0.0;
    std::size_t rows = 0;
    std::size_t error_rows = 0;
    double median_lambda = 0.0;
    std::vector<ColumnSummary> columns;
};

struct SweepSummary {
    std::vector<GroupSummary> groups;  // ascending axis value
    std::vector<std::string> ln_ratio_columns;
};

/// Throws EmptyInput when no row without an error is present.
SweepSummary summarize_sweep_csv(const std::string& csv_text);
std::string summary_text(const SweepSummary& s);

struct SeriesFile {
    std::string name;
    std::string contents;
};

/// Mis-selection vs axis value, ln ratios vs ln lambda, TV-to-limit vs axis value.
std::vector<SeriesFile> series_files(const SweepSummary& s);

}  // namespace oblab
