#pragma once

#include <string>
#include <vector>

namespace abc {

struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

struct ValidationOptions {
    // Replace the model rates by a table that violates pairwise balance.
    bool broken_rates = false;
    bool operator_convergence = true;
};

// Deterministic suite: pairwise balance, exhaustive stationarity (L=5),
// generator identities (L=7), constant identities, operator convergence.
std::vector<CheckResult> run_validation(const ValidationOptions& options = {});

} // namespace abc
