#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "racing_sr/oracle.hpp"

namespace racing_sr {

/// Names accepted by builtin_suite().
[[nodiscard]] std::vector<std::string> builtin_suite_names();

/// Built-in benchmark suite by name; throws std::invalid_argument if unknown.
///   trig-3-2-2      10 expressions, ops {+,-,*,sin,cos}, x in (-5,5)
///   trig-4-4-6      10 expressions, same ops and ranges
///   livermore2-n4   Vars4-1..25, x in (0.01,10)
///   feynman-n4      rows of the n=4 Feynman table that fit the grammar
[[nodiscard]] std::vector<BenchmarkSpec> builtin_suite(std::string_view name);

} // namespace racing_sr
