#pragma once

#include <string>
#include <vector>

#include "abcsim/analysis.hpp"

namespace abc {

// One row of the analyze battery.
struct TestSpec {
    std::string kind;
    std::string name; // generated from the other fields when empty
    Sign sign = Sign::plus;
    int n = 0;                    // 0: largest configured n
    double t = -1.0;              // < 0: horizon
    double eps = 0.0;             // block tests only
    double reference_scale = 1.0; // multiplies the reference (negative controls)
};

// Known test kinds.
const std::vector<std::string>& test_kinds();

struct RunConfig {
    ExperimentPlan plan;
    double asymmetry = 0.5;
    std::vector<TestSpec> tests;
    std::string out = "out";
};

// Parses and validates JSON text. Unknown keys, type mismatches and invariant
// violations raise ConfigError naming the key.
RunConfig parse_config(const std::string& text);
std::string config_to_json(const RunConfig& c, bool include_run_options = true);
// Re-runs the eager checks (after command-line overrides).
void validate_config(const RunConfig& c);

// Fills n and t defaults and the generated name.
TestSpec resolve_test(const TestSpec& spec, const RunConfig& c);
std::vector<TestSpec> default_battery(const RunConfig& c);

} // namespace abc
