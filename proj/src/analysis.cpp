#include "abcsim/analysis.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "abcsim/csv.hpp"
#include "abcsim/dynamics.hpp"
#include "abcsim/errors.hpp"

namespace abc {

void EstimatorReport::set_reference(double ref) {
    reference = ref;
    if (se > 0)
        z_score = (estimate - ref) / se;
    else
        z_score = estimate == ref ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), estimate - ref);
}

EstimatorReport batch_mean_estimate(const std::vector<double>& values, int batches, const std::string& name) {
    if (batches < 2) throw ParameterError("batch_mean_estimate: at least 2 batches required");
    const std::size_t N = values.size();
    if (N < static_cast<std::size_t>(batches)) throw ParameterError("batch_mean_estimate: fewer samples than batches");
    EstimatorReport r;
    r.name = name;
    r.batches = batches;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= N;
    r.estimate = mean;
    // batch b covers [b·N/B, (b+1)·N/B)
    std::vector<double> bm(batches, 0.0);
    for (int b = 0; b < batches; ++b) {
        std::size_t lo = N * b / batches, hi = N * (b + 1) / batches;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += values[i];
        bm[b] = s / (hi - lo);
    }
    double bmean = 0.0;
    for (double v : bm) bmean += v;
    bmean /= batches;
    double ss = 0.0;
    for (double v : bm) ss += (v - bmean) * (v - bmean);
    r.se = std::sqrt(ss / (batches - 1) / batches);
    double var = sample_variance(values);
    r.effective_samples = r.se > 0 ? var / (r.se * r.se) : static_cast<double>(N);
    return r;
}

EstimatorReport iid_estimate(const std::vector<double>& values, const std::string& name) {
    return batch_mean_estimate(values, static_cast<int>(values.size()), name);
}

std::vector<TestOutcome> test_limit_prediction(const std::vector<EstimatorReport>& reports, double tol) {
    std::vector<TestOutcome> out;
    for (const auto& r : reports) {
        if (!r.reference) throw ConfigError("test '" + r.name + "': no reference value attached");
        EstimatorReport c = r;
        c.set_reference(*r.reference);
        TestOutcome t;
        t.name = r.name;
        t.estimate = r.estimate;
        t.reference = *r.reference;
        t.se = r.se;
        t.z = *c.z_score;
        t.threshold = tol;
        t.pass = std::abs(t.z) <= tol;
        out.push_back(t);
    }
    return out;
}

double bonferroni_threshold(std::size_t m, double alpha, double floor_sigma) {
    if (m == 0) return floor_sigma;
    boost::math::normal_distribution<double> nd;
    double q = boost::math::quantile(nd, 1.0 - alpha / (2.0 * m));
    return std::max(floor_sigma, q);
}

LinearFit ols(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t N = xs.size();
    if (N != ys.size() || N < 3) throw ParameterError("ols: need at least 3 paired points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < N; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= N;
    my /= N;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < N; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (!(sxx > 0)) throw ParameterError("ols: regressor has zero variance");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double e = ys[i] - f.intercept - f.slope * xs[i];
        rss += e * e;
    }
    f.slope_se = std::sqrt(rss / (N - 2) / sxx);
    f.r_squared = syy > 0 ? 1.0 - rss / syy : 1.0;
    return f;
}

PowerLawFit fit_power_law(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 3) throw ParameterError("fit_power_law: need at least 3 points");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0) || !(ys[i] > 0)) throw ParameterError("fit_power_law: values must be positive");
        lx.push_back(std::log(xs[i]));
        ly.push_back(std::log(ys[i]));
    }
    auto f = ols(lx, ly);
    return {f.slope, f.intercept, f.r_squared, f.slope_se};
}

double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / (v.size() - 1);
}

double variance_se(const std::vector<double>& v) {
    const double N = static_cast<double>(v.size());
    if (N < 4) return std::numeric_limits<double>::infinity();
    double m = 0.0;
    for (double x : v) m += x;
    m /= N;
    double m2 = 0.0, m4 = 0.0;
    for (double x : v) {
        double d = (x - m) * (x - m);
        m2 += d;
        m4 += d * d;
    }
    m2 /= N;
    m4 /= N;
    return std::sqrt(std::max(0.0, (m4 - m2 * m2 * (N - 3) / (N - 1)) / N));
}

double correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t N = xs.size();
    if (N != ys.size() || N < 2) throw ParameterError("correlation: need at least 2 paired points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < N; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= N;
    my /= N;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < N; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (!(sxx > 0) || !(syy > 0)) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

ModelParams ExperimentPlan::params_for(int n) const {
    ModelParams p = params;
    p.n = n;
    p.lattice_size = std::max(lattice_factor * n, params.lattice_size);
    return p;
}

std::uint64_t ensemble_seed(std::uint64_t master, int n, std::uint64_t index) {
    return trajectory_seed(trajectory_seed(master, static_cast<std::uint64_t>(n)), index);
}

void check_plan(const ExperimentPlan& plan) {
    if (plan.ns.empty()) throw ConfigError("experiment.ns: at least one scale n is required");
    if (plan.threads < 1) throw ConfigError("threads: must be at least 1");
    for (int n : plan.ns) {
        auto p = plan.params_for(n);
        p.validate_for_ensemble();
        KernelTables t(p);
        auto k = normal_mode_constants(p, t);
        check_support_fits(plan.test_function, n, p.lattice_size);
        const double drift = std::abs(k.v_plus - k.v_minus) * plan.fields.horizon;
        if (drift > p.lattice_size / 4.0)
            throw ParameterError("wrap margin: the normal modes separate by " + format_double(drift) +
                                 " sites over the horizon, more than L/4 = " +
                                 format_double(p.lattice_size / 4.0) + " at n = " + std::to_string(n));
    }
}

void simulate_trajectory(const FieldEngine& engine, std::uint64_t seed, std::uint64_t id, FieldEngine::Workspace& ws,
                         FieldSeries& series, BlockSummary& blocks) {
    const auto& p = engine.params();
    Rng rng(seed);
    Configuration c = sample_invariant(p.densities, p.lattice_size, rng);
    const auto& times = engine.sample_times();
    std::vector<std::array<ModeSample, 2>> samples(times.size());

    const auto& eps = engine.block_eps();
    const auto& btimes = engine.block_times();
    blocks = BlockSummary{};
    blocks.eps = eps;
    blocks.energy.assign(eps.size(), {0.0, 0.0});
    blocks.substitute_pair.assign(eps.size(), {});
    std::vector<std::array<double, 2>> en, en_prev;
    std::vector<std::array<std::array<double, 4>, 2>> sp, sp_prev;
    double prev_t = 0.0;

    std::vector<Observer> obs;
    obs.push_back({times, [&](std::size_t k, double, const Configuration& cc) { samples[k] = engine.evaluate(cc, k, ws); }});
    if (!eps.empty()) {
        obs.push_back({btimes, [&](std::size_t j, double t, const Configuration& cc) {
                           engine.evaluate_blocks(cc, j, ws, en, sp);
                           if (j > 0) {
                               const double h = 0.5 * (t - prev_t);
                               for (std::size_t e = 0; e < eps.size(); ++e)
                                   for (int s = 0; s < 2; ++s) {
                                       blocks.energy[e][s] += h * (en_prev[e][s] + en[e][s]);
                                       for (int q = 0; q < 4; ++q)
                                           blocks.substitute_pair[e][s][q] += h * (sp_prev[e][s][q] + sp[e][s][q]);
                                   }
                           }
                           en_prev = en;
                           sp_prev = sp;
                           prev_t = t;
                       }});
    }
    Dynamics dyn(engine.tables(), engine.rates());
    SimulationClock clock;
    const double T = times.back();
    dyn.evolve_to(c, clock, T, rng, &obs);

    const auto& k = engine.constants();
    series = assemble_series(id, times, samples, engine.dt(), p.n, {k.v_plus, k.v_minus});
    blocks.substitute.assign(eps.size(), {0.0, 0.0});
    for (std::size_t e = 0; e < eps.size(); ++e)
        for (int s = 0; s < 2; ++s)
            blocks.substitute[e][s] = combine_pairs(blocks.substitute_pair[e][s], k.mode(sign_at(s)));
}

std::vector<EnsembleRun> run_ensemble(const ExperimentPlan& plan, const ProgressFn& progress) {
    check_plan(plan);
    std::vector<EnsembleRun> runs;
    for (int n : plan.ns) {
        EnsembleRun run;
        run.n = n;
        run.params = plan.params_for(n);
        FieldEngine engine(run.params, plan.test_function, plan.fields);
        run.constants = engine.constants();
        run.dt = engine.dt();
        const std::size_t N = plan.trajectories;
        run.series.resize(N);
        run.blocks.resize(N);
        std::atomic<std::size_t> next{0}, done{0};
        std::mutex mu;
        std::exception_ptr failure;
        auto worker = [&]() {
            try {
                auto ws = engine.make_workspace();
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= N) break;
                    simulate_trajectory(engine, ensemble_seed(plan.seed, n, i), i, *ws, run.series[i], run.blocks[i]);
                    std::size_t d = ++done;
                    if (progress) {
                        std::lock_guard<std::mutex> lock(mu);
                        progress(n, d, N);
                    }
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
                next = N;
            }
        };
        const int nt = std::max(1, std::min<int>(plan.threads, static_cast<int>(std::max<std::size_t>(N, 1))));
        if (nt == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        if (failure) std::rethrow_exception(failure);
        if (plan.fields.block_eps.empty()) run.blocks.clear();
        runs.push_back(std::move(run));
    }
    return runs;
}

namespace {

const char* kPairNames[4] = {"aa", "bb", "ab", "ba"};

std::vector<std::string> series_header() {
    std::vector<std::string> h{"trajectory_id", "t"};
    for (const char* col : {"z", "b", "i", "m", "qv"})
        for (const char* s : {"plus", "minus"}) h.push_back(std::string(col) + "_" + s);
    for (const char* s : {"plus", "minus"})
        for (const char* q : kPairNames) h.push_back(std::string("b_") + q + "_" + s);
    return h;
}

std::vector<std::string> blocks_header() {
    std::vector<std::string> h{"trajectory_id", "eps"};
    for (const char* col : {"energy", "sub"})
        for (const char* s : {"plus", "minus"}) h.push_back(std::string(col) + "_" + s);
    for (const char* s : {"plus", "minus"})
        for (const char* q : kPairNames) h.push_back(std::string("sub_") + q + "_" + s);
    return h;
}

double parse_double(const std::string& s, const std::string& path) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw IoError(path + ": malformed number '" + s + "'");
    return v;
}

} // namespace

void write_series_csv(const std::string& path, const std::vector<FieldSeries>& series, const std::string& hash) {
    CsvWriter w(path, series_header(), hash);
    std::vector<std::string> row;
    for (const auto& fs : series) {
        for (std::size_t k = 0; k < fs.size(); ++k) {
            row.clear();
            row.push_back(std::to_string(fs.trajectory_id));
            row.push_back(format_double(fs.t[k]));
            for (auto field : {&FieldSeries::z, &FieldSeries::b, &FieldSeries::i, &FieldSeries::m, &FieldSeries::qv})
                for (int s = 0; s < 2; ++s) row.push_back(format_double((fs.*field)[s][k]));
            for (int s = 0; s < 2; ++s)
                for (int q = 0; q < 4; ++q) row.push_back(format_double(fs.b_pair[s][q][k]));
            w.row(row);
        }
    }
    w.close();
}

std::vector<FieldSeries> read_series_csv(const std::string& path, std::string* hash) {
    auto table = read_csv(path);
    if (table.header != series_header()) throw IoError(path + ": unexpected series header");
    if (hash) *hash = table.manifest_hash;
    std::vector<FieldSeries> out;
    for (const auto& r : table.rows) {
        if (r.size() != table.header.size()) throw IoError(path + ": ragged row");
        std::uint64_t id = std::stoull(r[0]);
        if (out.empty() || out.back().trajectory_id != id) {
            out.emplace_back();
            out.back().trajectory_id = id;
        }
        auto& fs = out.back();
        fs.t.push_back(parse_double(r[1], path));
        std::size_t col = 2;
        for (auto field : {&FieldSeries::z, &FieldSeries::b, &FieldSeries::i, &FieldSeries::m, &FieldSeries::qv})
            for (int s = 0; s < 2; ++s) (fs.*field)[s].push_back(parse_double(r[col++], path));
        for (int s = 0; s < 2; ++s)
            for (int q = 0; q < 4; ++q) fs.b_pair[s][q].push_back(parse_double(r[col++], path));
    }
    return out;
}

void write_blocks_csv(const std::string& path, const std::vector<BlockSummary>& blocks, const std::string& hash) {
    CsvWriter w(path, blocks_header(), hash);
    std::vector<std::string> row;
    for (std::size_t id = 0; id < blocks.size(); ++id) {
        const auto& b = blocks[id];
        for (std::size_t e = 0; e < b.eps.size(); ++e) {
            row.clear();
            row.push_back(std::to_string(id));
            row.push_back(format_double(b.eps[e]));
            for (int s = 0; s < 2; ++s) row.push_back(format_double(b.energy[e][s]));
            for (int s = 0; s < 2; ++s) row.push_back(format_double(b.substitute[e][s]));
            for (int s = 0; s < 2; ++s)
                for (int q = 0; q < 4; ++q) row.push_back(format_double(b.substitute_pair[e][s][q]));
            w.row(row);
        }
    }
    w.close();
}

std::vector<BlockSummary> read_blocks_csv(const std::string& path, std::string* hash) {
    auto table = read_csv(path);
    if (table.header != blocks_header()) throw IoError(path + ": unexpected block header");
    if (hash) *hash = table.manifest_hash;
    std::vector<BlockSummary> out;
    for (const auto& r : table.rows) {
        if (r.size() != table.header.size()) throw IoError(path + ": ragged row");
        std::size_t id = std::stoull(r[0]);
        if (id != out.size() && id + 1 != out.size()) throw IoError(path + ": trajectory ids out of order");
        if (id == out.size()) out.emplace_back();
        auto& b = out.back();
        b.eps.push_back(parse_double(r[1], path));
        std::array<double, 2> en{}, sub{};
        std::array<std::array<double, 4>, 2> sp{};
        std::size_t col = 2;
        for (int s = 0; s < 2; ++s) en[s] = parse_double(r[col++], path);
        for (int s = 0; s < 2; ++s) sub[s] = parse_double(r[col++], path);
        for (int s = 0; s < 2; ++s)
            for (int q = 0; q < 4; ++q) sp[s][q] = parse_double(r[col++], path);
        b.energy.push_back(en);
        b.substitute.push_back(sub);
        b.substitute_pair.push_back(sp);
    }
    return out;
}

std::vector<double> across(const std::vector<FieldSeries>& series,
                           const std::array<std::vector<double>, 2> FieldSeries::*field, Sign s, std::size_t k) {
    std::vector<double> v;
    v.reserve(series.size());
    for (const auto& fs : series) v.push_back((fs.*field)[index_of(s)].at(k));
    return v;
}

std::size_t time_index(const FieldSeries& fs, double t) {
    if (fs.t.empty()) throw ParameterError("time_index: empty series");
    std::size_t best = 0;
    for (std::size_t k = 1; k < fs.t.size(); ++k)
        if (std::abs(fs.t[k] - t) < std::abs(fs.t[best] - t)) best = k;
    return best;
}

} // namespace abc
