#pragma once

// Text config for a single experiment:
//
//   # comment
//   scenario = partial-id
//   n = 1000
//   lambda_rule = 0.5*n
//   seed = 3
//   grid_resolution = 64
//
//   [overrides]
//   gamma_pen = 0.15

#include <string>

#include "oblab/scenarios.hpp"

namespace oblab {

/// Throws ConfigError naming the line and field on any problem.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Fully resolved config text (defaults filled in); parse_config(emit_config(c))
/// reproduces c.
std::string emit_config(const ScenarioConfig& cfg);

}  // namespace oblab
