#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "abcsim/fields.hpp"
#include "abcsim/kernel.hpp"
#include "abcsim/operators.hpp"

namespace abc {

struct EstimatorReport {
    std::string name;
    double estimate = 0.0;
    double se = 0.0;
    int batches = 0;
    double effective_samples = 0.0;
    std::optional<double> reference;
    std::optional<double> z_score;

    void set_reference(double ref);
};

// Mean of `values`; SE from the spread of `batches` contiguous batch means.
// With batches == values.size() this is the plain i.i.d. standard error.
EstimatorReport batch_mean_estimate(const std::vector<double>& values, int batches, const std::string& name = "");
EstimatorReport iid_estimate(const std::vector<double>& values, const std::string& name = "");

struct TestOutcome {
    std::string name;
    double estimate = 0.0;
    double reference = 0.0;
    double se = 0.0;
    double z = 0.0;
    double threshold = 4.0;
    bool pass = false;
};

// |z| ≤ tolerance_sigma for each report; a report without a reference is a configuration error.
std::vector<TestOutcome> test_limit_prediction(const std::vector<EstimatorReport>& reports, double tolerance_sigma = 4.0);

// max(floor, Φ^{-1}(1 − alpha/(2m))): two-sided Bonferroni threshold for m tests.
double bonferroni_threshold(std::size_t m, double alpha = 0.01, double floor_sigma = 4.0);

struct PowerLawFit {
    double exponent = 0.0;
    double intercept = 0.0; // natural log of the prefactor
    double r_squared = 0.0;
    double exponent_se = 0.0;
};

PowerLawFit fit_power_law(const std::vector<double>& xs, const std::vector<double>& ys);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double r_squared = 0.0;
};

LinearFit ols(const std::vector<double>& xs, const std::vector<double>& ys);
double sample_variance(const std::vector<double>& v);
double correlation(const std::vector<double>& xs, const std::vector<double>& ys);
// SE of the sample variance of i.i.d. values (from the fourth central moment).
double variance_se(const std::vector<double>& v);

struct ExperimentPlan {
    ModelParams params; // n and lattice_size are set per entry of ns
    std::vector<int> ns{64};
    int lattice_factor = 0; // L(n) = max(lattice_factor·n, params.lattice_size)
    std::size_t trajectories = 100;
    FieldOptions fields;
    TestFunction test_function = TestFunction::gaussian(0.0, 1.0);
    std::uint64_t seed = 1;
    int threads = 1;

    ModelParams params_for(int n) const;
};

struct EnsembleRun {
    int n = 0;
    ModelParams params;
    NormalModeConstants constants;
    double dt = 0.0;
    std::vector<FieldSeries> series;
    std::vector<BlockSummary> blocks; // empty unless block eps are configured
};

// Seed of trajectory `index` at scale n.
std::uint64_t ensemble_seed(std::uint64_t master, int n, std::uint64_t index);

// Wrap-margin checks: ensemble lattice invariants and |v⁺ − v⁻|·T ≤ L/4.
void check_plan(const ExperimentPlan& plan);

using ProgressFn = std::function<void(int n, std::size_t done, std::size_t total)>;

// Independent trajectories from ν_ρ; results are stored in trajectory order whatever the thread count.
std::vector<EnsembleRun> run_ensemble(const ExperimentPlan& plan, const ProgressFn& progress = nullptr);

// One trajectory on a prepared engine.
void simulate_trajectory(const FieldEngine& engine, std::uint64_t seed, std::uint64_t id, FieldEngine::Workspace& ws,
                         FieldSeries& series, BlockSummary& blocks);

// CSV interchange (first line records the manifest hash).
void write_series_csv(const std::string& path, const std::vector<FieldSeries>& series, const std::string& hash);
std::vector<FieldSeries> read_series_csv(const std::string& path, std::string* hash = nullptr);
void write_blocks_csv(const std::string& path, const std::vector<BlockSummary>& blocks, const std::string& hash);
std::vector<BlockSummary> read_blocks_csv(const std::string& path, std::string* hash = nullptr);

// Values of one column at sample index k across trajectories.
std::vector<double> across(const std::vector<FieldSeries>& series, const std::array<std::vector<double>, 2> FieldSeries::*field,
                           Sign s, std::size_t k);
// Index of the sample time closest to t.
std::size_t time_index(const FieldSeries& fs, double t);

} // namespace abc
