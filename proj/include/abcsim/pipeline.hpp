#pragma once

#include <string>
#include <vector>

#include "abcsim/analysis.hpp"
#include "abcsim/config.hpp"

namespace abc {

const char* code_version();

// Hash of everything that determines simulation output (model, experiment, seed, code version).
std::string manifest_hash(const RunConfig& c);

struct Manifest {
    std::string hash;
    std::string version;
    RunConfig config;
    std::vector<std::string> files;
};

// Writes series_n<n>.csv (and blocks_n<n>.csv when block eps are set), then manifest.json.
Manifest simulate_to_dir(const RunConfig& c, const std::string& dir, const ProgressFn& progress = nullptr);

// Throws IoError when the manifest is missing or malformed.
Manifest read_manifest(const std::string& dir);

struct LoadedRun {
    int n = 0;
    std::vector<FieldSeries> series;
    std::vector<BlockSummary> blocks;
};

// Loads every CSV listed in the manifest; refuses files whose manifest hash differs
// and stray series/blocks files from other runs.
std::vector<LoadedRun> load_runs(const std::string& dir, const Manifest& m);

// Evaluates the tests (resolved) against the ensemble; thresholds are Bonferroni over the battery.
std::vector<TestOutcome> run_battery(const RunConfig& c, const std::vector<LoadedRun>& runs,
                                     const std::vector<TestSpec>& tests);

// Reads the simulate output in dir, runs the battery (configured tests, else the default
// battery) and writes battery.csv. Nothing is written on error.
std::vector<TestOutcome> analyze_dir(const std::string& dir, const std::vector<TestSpec>* tests = nullptr);

void write_battery_csv(const std::string& path, const std::vector<TestOutcome>& rows, const std::string& hash);
std::vector<TestOutcome> read_battery_csv(const std::string& path, std::string* hash = nullptr);

// Reads battery.csv and the manifest, writes report.txt and returns its text.
std::string report_dir(const std::string& dir, bool* all_pass = nullptr);

} // namespace abc
