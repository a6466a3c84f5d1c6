#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "oblab/config.hpp"
#include "oblab/errors.hpp"
#include "oblab/format.hpp"
#include "oblab/numerics.hpp"
#include "oblab/runner.hpp"

namespace fs = std::filesystem;
using namespace oblab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void write_file(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << contents;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

unsigned resolve_threads(int flag) {
    if (flag > 0) return static_cast<unsigned>(flag);
    if (const char* env = std::getenv("OB_THREADS")) {
        try {
            const int k = std::stoi(env);
            if (k > 0) return static_cast<unsigned>(k);
        } catch (const std::exception&) {
        }
        throw ConfigError(std::string("OB_THREADS must be a positive integer, got '") + env + "'");
    }
    return 1;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(parse_double(item));
    }
    return out;
}

// "1-50" or "1,2,7"
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    if (text.empty()) return out;
    const auto dash = text.find('-');
    if (dash != std::string::npos && text.find(',') == std::string::npos) {
        const auto lo = std::stoull(text.substr(0, dash));
        const auto hi = std::stoull(text.substr(dash + 1));
        if (hi < lo) throw ConfigError("seed range '" + text + "' is empty");
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
        return out;
    }
    for (double v : parse_list(text)) {
        if (v < 0 || v != std::floor(v)) throw ConfigError("seeds must be nonnegative integers");
        out.push_back(static_cast<std::uint64_t>(v));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasi-posterior model selection diagnostics on gridded model spaces"};
    app.require_subcommand(1);

    std::string out_dir = "out";
    int threads = 0;
    bool dry_run = false;
    std::string format = "json";
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--threads", threads, "Worker threads (falls back to OB_THREADS, then 1)");
    app.add_flag("--dry-run", dry_run, "Validate and print the resolved config without writing anything");
    app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));

    std::string cfg_path;
    std::size_t mcmc_steps = 0;
    auto* run = app.add_subcommand("run", "Run one configured experiment and write its diagnostics report");
    run->add_option("config", cfg_path, "Config file")->required();
    run->add_option("--mcmc-steps", mcmc_steps, "Metropolis cross-check steps per chain (0 = off)");

    std::string axis = "n", values, seeds;
    auto* sweep = app.add_subcommand("sweep", "Sweep one axis over values x seeds and write sweep.csv");
    sweep->add_option("config", cfg_path, "Base config file")->required();
    sweep->add_option("--axis", axis, "n, lambda, seed or resolution");
    sweep->add_option("--values", values, "Comma-separated axis values")->required();
    sweep->add_option("--seeds", seeds, "Seed list '1,2,3' or range '1-50' (default: config seed)");

    std::string csv_path;
    auto* report = app.add_subcommand("report", "Summarize a sweep CSV and write plot-data series");
    report->add_option("csv", csv_path, "Sweep CSV")->required();

    auto* list = app.add_subcommand("list-scenarios", "List built-in scenarios and their override keys");

    for (auto* sub : {run, sweep, report, list}) {
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--threads", threads, "Worker threads");
        sub->add_flag("--dry-run", dry_run, "Validate only");
        sub->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        set_thread_count(resolve_threads(threads));

        if (*list) {
            for (auto id : all_scenarios()) {
                std::cout << to_string(id) << "\n  " << describe(id) << "\n  overrides:";
                for (const auto& [k, v] : scenario_defaults(id)) std::cout << " " << k << "=" << format_double(v);
                std::cout << "\n";
            }
            return kExitOk;
        }

        if (*run) {
            const ScenarioConfig cfg = load_config(cfg_path);
            if (dry_run) {
                std::cout << emit_config(cfg);
                return kExitOk;
            }
            RunOptions opts;
            opts.metropolis_steps = mcmc_steps;
            const DiagnosticsReport rep = run_experiment(cfg, opts);
            const auto doc = to_json(rep);
            const fs::path dir(out_dir);
            if (format == "json")
                write_file(dir / "report.json", doc.dump(2) + "\n");
            else
                write_file(dir / "report.csv", json_to_csv(doc));
            write_file(dir / "resolved.cfg", rep.config_text);
            std::cout << to_string(cfg.scenario) << ": 1-pi(M0) = " << format_double(rep.misselect)
                      << ", prop1 residual = " << format_double(rep.prop1_residual) << "\n";
            for (const auto& c : rep.checks) std::cout << "  " << (c.pass ? "ok   " : "FAIL ") << c.name << "\n";
            if (!rep.all_pass()) {
                std::cerr << "CheckFailed: at least one inequality check failed (report written)\n";
                return kExitCheckFailed;
            }
            return kExitOk;
        }

        if (*sweep) {
            const ScenarioConfig cfg = load_config(cfg_path);
            SweepSpec spec;
            spec.axis = parse_axis(axis);
            spec.values = parse_list(values);
            spec.seeds = parse_seeds(seeds);
            if (spec.values.empty()) throw ConfigError("--values is empty");
            if (dry_run) {
                std::cout << emit_config(cfg) << "\n# sweep axis " << to_string(spec.axis) << ", "
                          << spec.values.size() << " values\n";
                return kExitOk;
            }
            const auto rows = run_sweep(cfg, spec);
            const std::size_t models = make_scenario(cfg).space->size();
            write_file(fs::path(out_dir) / "sweep.csv", sweep_csv(rows, models));
            std::size_t failed = 0;
            for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
            std::cout << rows.size() << " rows written, " << failed << " with errors\n";
            return kExitOk;
        }

        if (*report) {
            const auto summary = summarize_sweep_csv(read_file(csv_path));
            const std::string text = summary_text(summary);
            std::cout << text;
            if (dry_run) return kExitOk;
            const fs::path dir(out_dir);
            write_file(dir / "summary.txt", text);
            for (const auto& s : series_files(summary)) write_file(dir / s.name, s.contents);
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "ConfigError: " << e.message() << "\n";
        return kExitConfig;
    } catch (const UnknownScenario& e) {
        std::cerr << "ConfigError: " << e.message() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
