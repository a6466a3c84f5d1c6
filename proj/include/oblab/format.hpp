#pragma once

#include <string>

namespace oblab {

/// Shortest round-trip decimal; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double x);

/// Inverse of format_double. Throws ConfigError on malformed text.
double parse_double(const std::string& text);

}  // namespace oblab
