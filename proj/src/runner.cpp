#include "oblab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "oblab/config.hpp"
#include "oblab/errors.hpp"
#include "oblab/format.hpp"
#include "oblab/numerics.hpp"
#include "oblab/rng.hpp"

namespace oblab {

namespace {

constexpr double kProp1Tol = 1e-12;
constexpr double kProp2Tol = 1e-12;
constexpr double kMeanTol = 1e-10;
constexpr double kMetropolisTol = 0.03;

nlohmann::json num(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

nlohmann::json num_array(const std::vector<double>& xs) {
    auto a = nlohmann::json::array();
    for (double x : xs) a.push_back(num(x));
    return a;
}

nlohmann::json check_json(const InequalityCheck& c) {
    return {{"lhs", num(c.lhs)}, {"rhs", num(c.rhs)}, {"vacuous", c.vacuous}, {"pass", c.holds}};
}

// Nonnegative test functions for the Gibbs-limit inequality: smooth random
// log-normal fields and random indicator events, alternating.
std::vector<double> random_h(Rng& rng, std::size_t cells, std::size_t k) {
    std::vector<double> h(cells);
    if (k % 2 == 0) {
        const double scale = rng.uniform(0.0, 3.0);
        for (auto& x : h) x = std::exp(scale * rng.normal());
    } else {
        const double p = rng.uniform(0.05, 0.95);
        for (auto& x : h) x = rng.uniform() < p ? 1.0 : 0.0;
    }
    return h;
}

}  // namespace

bool DiagnosticsReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const NamedCheck& c) { return c.pass; });
}

DiagnosticsReport run_experiment(const ScenarioConfig& cfg, const RunOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const Experiment ex = make_scenario(cfg);
    const QuasiPosterior qp = build(ex.space, ex.pair, ex.lambda, ex.data);
    const ModelSpace& space = *ex.space;

    DiagnosticsReport rep;
    rep.cfg = cfg;
    rep.config_text = emit_config(cfg);
    rep.lambda = ex.lambda;
    rep.risk_tag = ex.pair.tag();
    rep.theoretical_tag = ex.pair.theoretical_tag().describe();
    rep.total_cells = space.total_cells();
    for (const auto& m : space.models()) rep.model_labels.push_back(m.label);
    rep.true_ids = space.true_ids();

    rep.model_probabilities = model_masses(qp.pi);
    rep.map_model = map_model(qp);
    rep.misselect = misselection_probability(qp);

    const GridMeasure oracle = oracle_posterior(qp);
    const GridMeasure selected = selection_posterior(qp);
    rep.tv_pi_oracle = tv_distance(qp.pi, oracle);
    rep.tv_pi_selection = tv_distance(qp.pi, selected);
    rep.tv_selection_oracle = tv_distance(selected, oracle);
    rep.prop1_residual = std::abs(rep.tv_pi_oracle - rep.misselect);
    rep.prop2_max_tv = std::max({rep.tv_pi_oracle, rep.tv_pi_selection, rep.tv_selection_oracle});
    rep.prop2_bound = 2.0 * rep.misselect;

    rep.bounds = prop3_check(qp);
    rep.msrisk = msrisk_check(qp);
    if (std::isfinite(rep.bounds.gamma) && rep.bounds.gamma > 0.0)
        rep.riskbd_levels = {0.5 * rep.bounds.gamma, rep.bounds.gamma, 2.0 * rep.bounds.gamma};
    const auto [rmin, rmax] = std::minmax_element(qp.theoretical_risk.begin(), qp.theoretical_risk.end());
    if (*rmax > *rmin) rep.riskbd_levels.push_back(0.1 * (*rmax - *rmin));
    for (double level : rep.riskbd_levels) rep.riskbd.push_back(riskbd_check(qp, level));

    Rng rng(derive_seed(cfg.seed, 77));
    rep.gibbslim_min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < opts.gibbslim_samples; ++k) {
        const auto h = random_h(rng, space.total_cells(), k);
        try {
            const auto c = gibbslim_check(qp, h);
            ++rep.gibbslim_checked;
            if (!c.holds) ++rep.gibbslim_violations;
            rep.gibbslim_min_margin = std::min(rep.gibbslim_min_margin, c.rhs - c.lhs);
        } catch (const ZeroMass&) {
            // pi(h) = 0 makes the inequality trivial
        }
    }
    rep.gibbslim_events = gibbslim_event_checks(qp);

    rep.mean = mean_decomposition(qp);

    if (!ex.region_mask.empty()) {
        rep.limit_kind = "prior truncated to the identification region";
        rep.tv_to_limit = tv_distance(qp.pi, limiting_posterior_target(ex.space, ex.region_mask));
    } else {
        rep.limit_kind = "limiting posterior phi";
        rep.tv_to_limit = tv_distance(qp.pi, qp.phi);
    }

    rep.compatibility = ex.compatibility;
    if (opts.bic && cfg.scenario != ScenarioId::PartialId) {
        rep.bic = bic_report(space, ex.pair, ex.lambda, ex.data);
    } else {
        rep.bic.applicable = false;
        if (cfg.scenario == ScenarioId::PartialId)
            rep.bic.warnings.push_back("argmin is a set under partial identification; BIC diagnostics disabled");
    }
    rep.ratios = model_ratio_diagnostics(qp, ex.pair);

    if (opts.metropolis_steps > 0) {
        MetropolisResult agg;
        agg.model_prob_mcmc.assign(space.size(), 0.0);
        const double chains = static_cast<double>(std::max<std::size_t>(opts.metropolis_chains, 1));
        for (std::size_t c = 0; c < std::max<std::size_t>(opts.metropolis_chains, 1); ++c) {
            const auto r = metropolis_check(qp, ex.pair, ex.data, opts.metropolis_steps, derive_seed(cfg.seed, 1000 + c));
            for (std::size_t j = 0; j < space.size(); ++j) agg.model_prob_mcmc[j] += r.model_prob_mcmc[j] / chains;
            agg.tv_to_grid += r.tv_to_grid / chains;
            agg.acceptance_rate += r.acceptance_rate / chains;
        }
        rep.metropolis = agg;
    }

    const auto all_hold = [](const std::vector<InequalityCheck>& v) {
        return std::all_of(v.begin(), v.end(), [](const InequalityCheck& c) { return c.holds; });
    };
    rep.checks = {
        {"prop1_identity", rep.prop1_residual <= kProp1Tol},
        {"prop2_bound", rep.prop2_max_tv <= rep.prop2_bound + kProp2Tol},
        {"prop3_bound", rep.bounds.inequality_holds},
        {"u_uniform", rep.bounds.u_uniform_holds},
        {"r_upper", rep.bounds.r_upper_holds},
        {"msrisk", rep.msrisk.holds},
        {"riskbd", all_hold(rep.riskbd) && rep.bounds.riskbd_checked},
        {"gibbslim", rep.gibbslim_violations == 0 && all_hold(rep.gibbslim_events) &&
                         rep.bounds.gibbslim_margin >= -kBoundTol},
        {"mean_identity", rep.mean.residual <= kMeanTol},
    };
    if (rep.metropolis) {
        double worst = 0.0;
        for (std::size_t j = 0; j < space.size(); ++j)
            worst = std::max(worst, std::abs(rep.metropolis->model_prob_mcmc[j] - rep.model_probabilities[j]));
        rep.checks.push_back({"metropolis_agreement", worst <= kMetropolisTol});
    }

    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

nlohmann::json to_json(const DiagnosticsReport& r, bool include_timing) {
    using nlohmann::json;
    json j;
    j["version"] = kVersion;
    j["config"] = {{"scenario", to_string(r.cfg.scenario)},
                   {"n", r.cfg.n},
                   {"lambda_rule", r.cfg.effective_lambda_rule().text()},
                   {"seed", r.cfg.seed},
                   {"grid_resolution", r.cfg.grid_resolution},
                   {"text", r.config_text}};
    json ov = json::object();
    for (const auto& [k, v] : scenario_defaults(r.cfg.scenario)) ov[k] = num(r.cfg.override_or(k, v));
    j["config"]["overrides"] = ov;

    j["lambda"] = num(r.lambda);
    j["risk"] = {{"tag", r.risk_tag}, {"theoretical", r.theoretical_tag}};
    j["grid"] = {{"resolution", r.cfg.grid_resolution}, {"total_cells", r.total_cells}};
    j["models"] = {{"labels", r.model_labels},
                   {"true_ids", r.true_ids},
                   {"probabilities", num_array(r.model_probabilities)},
                   {"map", r.map_model},
                   {"misselect", num(r.misselect)}};
    j["tv"] = {{"pi_oracle", num(r.tv_pi_oracle)},
               {"pi_selection", num(r.tv_pi_selection)},
               {"selection_oracle", num(r.tv_selection_oracle)},
               {"to_limit", num(r.tv_to_limit)},
               {"limit", r.limit_kind}};
    j["prop1"] = {{"lhs", num(r.tv_pi_oracle)}, {"rhs", num(r.misselect)}, {"residual", num(r.prop1_residual)}};
    j["prop2"] = {{"max_tv", num(r.prop2_max_tv)}, {"bound", num(r.prop2_bound)}};
    const auto& b = r.bounds;
    j["prop3"] = {{"gamma", num(b.gamma)},
                  {"grid_step", num(b.grid_step)},
                  {"r", num(b.r)},
                  {"u", num(b.u)},
                  {"u_uniform", num(b.u_uniform)},
                  {"r_upper", num(b.r_upper)},
                  {"lhs_log_misselect", num(b.lhs_log_misselect)},
                  {"rhs_bound", num(b.rhs_bound)},
                  {"active", b.bound_active}};
    json rb = json::array();
    for (std::size_t i = 0; i < r.riskbd.size(); ++i) {
        auto c = check_json(r.riskbd[i]);
        c["gamma_q"] = num(r.riskbd_levels[i]);
        rb.push_back(c);
    }
    json ev = json::array();
    for (const auto& e : r.gibbslim_events) ev.push_back(check_json(e));
    j["inequalities"] = {{"msrisk", check_json(r.msrisk)},
                       {"riskbd", rb},
                       {"gibbslim",
                        {{"checked", r.gibbslim_checked},
                         {"violations", r.gibbslim_violations},
                         {"min_margin", num(r.gibbslim_min_margin)},
                         {"events", ev}}}};
    json per_model = json::array();
    for (const auto& v : r.mean.rhs_per_model) per_model.push_back(num_array(v));
    j["mean_decomposition"] = {{"lhs", num_array(r.mean.lhs)},
                               {"rhs_total", num_array(r.mean.rhs_total)},
                               {"rhs_per_model", per_model},
                               {"two_term", num_array(r.mean.two_term)},
                               {"residual", num(r.mean.residual)}};
    if (r.compatibility) {
        const auto& c = *r.compatibility;
        j["compatibility"] = {{"inf_theoretical_risk", num_array(c.inf_theoretical_risk)},
                              {"compatible", c.compatible},
                              {"compatible_set", c.compatible_set},
                              {"g", c.g_defined ? num(c.g) : json(nullptr)},
                              {"g_defined", c.g_defined}};
    }
    json bm = json::array();
    for (const auto& m : r.bic.models)
        bm.push_back({{"id", m.id},
                      {"exact", num(m.exact)},
                      {"approx", num(m.approx)},
                      {"error", num(m.error)},
                      {"d", m.d},
                      {"theta_hat", num_array(m.theta_hat)}});
    j["bic"] = {{"applicable", r.bic.applicable},
                {"models", bm},
                {"log_ratio", num_array(r.bic.log_ratio)},
                {"warnings", r.bic.warnings}};
    json rm = json::array();
    for (const auto& m : r.ratios.models)
        rm.push_back({{"id", m.id}, {"log_ratio", num(m.log_ratio)}, {"regime", to_string(m.regime)}});
    j["model_ratios"] = {{"models", rm}, {"warnings", r.ratios.warnings}};
    if (r.metropolis)
        j["metropolis"] = {{"model_probabilities", num_array(r.metropolis->model_prob_mcmc)},
                           {"tv_to_grid", num(r.metropolis->tv_to_grid)},
                           {"acceptance_rate", num(r.metropolis->acceptance_rate)}};
    json checks = json::object();
    for (const auto& c : r.checks) checks[c.name] = c.pass;
    j["checks"] = checks;
    j["all_pass"] = r.all_pass();
    if (include_timing) j["timing"] = {{"wall_time_s", r.wall_time_s}};
    return j;
}

std::string json_to_csv(const nlohmann::json& doc) {
    std::ostringstream out;
    out << "key,value\n";
    const auto flat = doc.flatten();
    for (auto it = flat.begin(); it != flat.end(); ++it) {
        std::string value = it->is_string() ? it->get<std::string>() : it->dump();
        std::replace(value.begin(), value.end(), '\n', ' ');
        if (value.find_first_of(",\"") != std::string::npos) {
            std::string quoted = "\"";
            for (char ch : value) {
                if (ch == '"') quoted += '"';
                quoted += ch;
            }
            value = quoted + "\"";
        }
        out << it.key() << "," << value << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------

SweepAxis parse_axis(const std::string& name) {
    if (name == "n") return SweepAxis::N;
    if (name == "lambda") return SweepAxis::Lambda;
    if (name == "seed") return SweepAxis::Seed;
    if (name == "resolution") return SweepAxis::Resolution;
    throw ConfigError("unknown sweep axis '" + name + "' (expected n, lambda, seed or resolution)");
}

std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::N: return "n";
        case SweepAxis::Lambda: return "lambda";
        case SweepAxis::Seed: return "seed";
        case SweepAxis::Resolution: return "resolution";
    }
    return "?";
}

namespace {

std::size_t as_count(double v, const char* what) {
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e15)
        throw ConfigError(std::string(what) + " values must be nonnegative integers");
    return static_cast<std::size_t>(v);
}

SweepRow sweep_one(const ScenarioConfig& cfg, double axis_value) {
    SweepRow row;
    row.axis_value = axis_value;
    row.seed = cfg.seed;
    try {
        const Experiment ex = make_scenario(cfg);
        row.lambda = ex.lambda;
        const QuasiPosterior qp = build(ex.space, ex.pair, ex.lambda, ex.data);
        const GridMeasure oracle = oracle_posterior(qp);
        const GridMeasure selected = selection_posterior(qp);
        row.misselect = misselection_probability(qp);
        row.tv_pi_oracle = tv_distance(qp.pi, oracle);
        row.tv_pi_selection = tv_distance(qp.pi, selected);
        row.tv_selection_oracle = tv_distance(selected, oracle);
        row.tv_to_limit = ex.region_mask.empty()
                              ? tv_distance(qp.pi, qp.phi)
                              : tv_distance(qp.pi, limiting_posterior_target(ex.space, ex.region_mask));
        const BoundReport b = prop3_check(qp);
        row.gamma = b.gamma;
        row.r = b.r;
        row.u = b.u;
        row.bound_rhs = b.rhs_bound;
        for (const auto& m : model_ratio_diagnostics(qp, ex.pair).models) row.ln_ratio.push_back(m.log_ratio);
    } catch (const Error& e) {
        row.error = e.what();
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const SweepSpec& spec) {
    if (spec.values.empty()) throw ConfigError("sweep needs at least one axis value");
    std::vector<std::uint64_t> seeds = spec.seeds.empty() ? std::vector<std::uint64_t>{base.seed} : spec.seeds;
    struct Job {
        ScenarioConfig cfg;
        double value;
    };
    std::vector<Job> jobs;
    for (double v : spec.values) {
        if (spec.axis == SweepAxis::Seed) {
            ScenarioConfig c = base;
            c.seed = as_count(v, "seed");
            jobs.push_back({c, v});
            continue;
        }
        for (auto s : seeds) {
            ScenarioConfig c = base;
            c.seed = s;
            switch (spec.axis) {
                case SweepAxis::N: c.n = as_count(v, "n"); break;
                case SweepAxis::Lambda: c.lambda_rule = LambdaRule{v, 0.0, true}; break;
                case SweepAxis::Resolution: c.grid_resolution = as_count(v, "resolution"); break;
                case SweepAxis::Seed: break;
            }
            jobs.push_back({c, v});
        }
    }
    std::vector<SweepRow> rows(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) { rows[i] = sweep_one(jobs[i].cfg, jobs[i].value); }, 1);
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, std::size_t model_count) {
    std::ostringstream out;
    out << "axis_value,seed,lambda,misselect,tv_pi_oracle,tv_pi_selection,tv_selection_oracle,tv_to_limit,gamma,r,u,"
           "bound_rhs";
    for (std::size_t j = 0; j < model_count; ++j) out << ",ln_ratio_" << j;
    out << ",error\n";
    for (const auto& r : rows) {
        out << format_double(r.axis_value) << "," << r.seed;
        if (r.error.empty()) {
            for (double x : {r.lambda, r.misselect, r.tv_pi_oracle, r.tv_pi_selection, r.tv_selection_oracle,
                             r.tv_to_limit, r.gamma, r.r, r.u, r.bound_rhs})
                out << "," << format_double(x);
            for (std::size_t j = 0; j < model_count; ++j)
                out << "," << (j < r.ln_ratio.size() ? format_double(r.ln_ratio[j]) : "");
            out << ",\n";
        } else {
            out << "," << format_double(r.lambda);
            for (std::size_t k = 0; k < 9 + model_count; ++k) out << ",";
            std::string msg = r.error;
            for (char& ch : msg)
                if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
            out << "," << msg << "\n";
        }
    }
    return out.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

SweepSummary summarize_sweep_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw EmptyInput("sweep CSV is empty");
    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* req : {"axis_value", "lambda", "misselect", "tv_to_limit", "error"})
        if (!col.count(req)) throw SchemaMismatch(std::string("sweep CSV lacks column '") + req + "'");

    SweepSummary s;
    std::vector<std::string> numeric = {"misselect", "tv_pi_oracle", "tv_pi_selection", "tv_selection_oracle",
                                        "tv_to_limit", "gamma", "r", "u", "bound_rhs"};
    for (const auto& h : header)
        if (h.rfind("ln_ratio_", 0) == 0) {
            s.ln_ratio_columns.push_back(h);
            numeric.push_back(h);
        }

    struct Acc {
        std::size_t rows = 0, errors = 0;
        std::vector<double> lambda;
        std::map<std::string, std::vector<double>> values;
    };
    std::map<double, Acc> groups;
    std::size_t good = 0;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw SchemaMismatch("sweep CSV line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                                 " fields, expected " + std::to_string(header.size()));
        const double x = parse_double(cells[col["axis_value"]]);
        auto& g = groups[x];
        ++g.rows;
        if (!cells[col["error"]].empty()) {
            ++g.errors;
            continue;
        }
        ++good;
        g.lambda.push_back(parse_double(cells[col["lambda"]]));
        for (const auto& name : numeric)
            if (col.count(name) && !cells[col[name]].empty()) g.values[name].push_back(parse_double(cells[col[name]]));
    }
    if (good == 0) throw EmptyInput("sweep CSV has no successful rows");

    for (auto& [x, g] : groups) {
        GroupSummary gs;
        gs.axis_value = x;
        gs.rows = g.rows;
        gs.error_rows = g.errors;
        if (g.lambda.empty()) {
            s.groups.push_back(gs);
            continue;
        }
        gs.median_lambda = median(g.lambda);
        for (const auto& name : numeric) {
            const auto it = g.values.find(name);
            if (it == g.values.end() || it->second.empty()) continue;
            gs.columns.push_back({name, median(it->second), quantile(it->second, 0.1), quantile(it->second, 0.9)});
        }
        s.groups.push_back(gs);
    }
    return s;
}

namespace {

const ColumnSummary* find_column(const GroupSummary& g, const std::string& name) {
    for (const auto& c : g.columns)
        if (c.column == name) return &c;
    return nullptr;
}

}  // namespace

std::string summary_text(const SweepSummary& s) {
    std::ostringstream out;
    for (const auto& g : s.groups) {
        out << "axis_value " << format_double(g.axis_value) << ": " << g.rows << " rows, " << g.error_rows
            << " errors";
        if (g.columns.empty()) {
            out << "\n";
            continue;
        }
        out << ", median lambda " << format_double(g.median_lambda) << "\n";
        for (const auto& c : g.columns)
            out << "  " << c.column << " median " << format_double(c.median) << " q10 " << format_double(c.q10)
                << " q90 " << format_double(c.q90) << "\n";
    }
    return out.str();
}

std::vector<SeriesFile> series_files(const SweepSummary& s) {
    SeriesFile mis{"misselect_vs_axis.csv", "x,median,q10,q90\n"};
    SeriesFile tv{"tv_to_limit_vs_axis.csv", "x,median,q10,q90\n"};
    SeriesFile lr{"ln_ratio_vs_ln_lambda.csv", "ln_lambda"};
    for (const auto& c : s.ln_ratio_columns) lr.contents += "," + c;
    lr.contents += "\n";
    for (const auto& g : s.groups) {
        if (g.columns.empty()) continue;
        const std::string x = format_double(g.axis_value);
        if (const auto* c = find_column(g, "misselect"))
            mis.contents += x + "," + format_double(c->median) + "," + format_double(c->q10) + "," +
                            format_double(c->q90) + "\n";
        if (const auto* c = find_column(g, "tv_to_limit"))
            tv.contents += x + "," + format_double(c->median) + "," + format_double(c->q10) + "," +
                           format_double(c->q90) + "\n";
        lr.contents += format_double(std::log(g.median_lambda));
        for (const auto& name : s.ln_ratio_columns) {
            const auto* c = find_column(g, name);
            lr.contents += "," + (c ? format_double(c->median) : std::string());
        }
        lr.contents += "\n";
    }
    return {mis, lr, tv};
}

}  // namespace oblab
