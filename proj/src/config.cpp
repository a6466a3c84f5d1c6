#include "oblab/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "oblab/errors.hpp"
#include "oblab/format.hpp"

namespace oblab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::uint64_t parse_unsigned(const std::string& v, const std::string& where) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError(where + ": expected a nonnegative integer, got '" + v + "'");
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ConfigError(where + ": integer out of range '" + v + "'");
    }
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig cfg;
    bool have_scenario = false;
    std::string section;
    std::map<std::string, std::size_t> override_lines;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "overrides") throw ConfigError(where + ": unknown section '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (value.empty()) throw ConfigError(where + ": field '" + key + "' has no value");
        const std::string field = where + ", field '" + key + "'";

        if (section == "overrides") {
            if (cfg.overrides.count(key)) throw ConfigError(field + ": duplicate override");
            override_lines[key] = lineno;
            try {
                cfg.overrides[key] = parse_double(value);
            } catch (const Error& e) {
                throw ConfigError(field + ": " + e.message());
            }
            continue;
        }
        try {
            if (key == "scenario") {
                cfg.scenario = parse_scenario(value);
                have_scenario = true;
            } else if (key == "n") {
                cfg.n = parse_unsigned(value, field);
            } else if (key == "lambda_rule") {
                cfg.lambda_rule = LambdaRule::parse(value);
            } else if (key == "seed") {
                cfg.seed = parse_unsigned(value, field);
            } else if (key == "grid_resolution") {
                cfg.grid_resolution = parse_unsigned(value, field);
            } else {
                throw ConfigError("unknown key");
            }
        } catch (const Error& e) {
            throw ConfigError(field + ": " + e.message());
        }
    }
    if (!have_scenario) throw ConfigError("missing required field 'scenario'");
    const auto& allowed = scenario_defaults(cfg.scenario);
    for (const auto& [key, line] : override_lines)
        if (!allowed.count(key))
            throw ConfigError("line " + std::to_string(line) + ", field '" + key + "': unknown override for scenario " +
                              to_string(cfg.scenario));
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid config: ") + e.message());
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string emit_config(const ScenarioConfig& cfg) {
    std::ostringstream out;
    out << "scenario = " << to_string(cfg.scenario) << "\n";
    out << "n = " << cfg.n << "\n";
    out << "lambda_rule = " << cfg.effective_lambda_rule().text() << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "grid_resolution = " << cfg.grid_resolution << "\n";
    out << "\n[overrides]\n";
    for (const auto& [k, v] : scenario_defaults(cfg.scenario))
        out << k << " = " << format_double(cfg.override_or(k, v)) << "\n";
    return out.str();
}

}  // namespace oblab
