#include "abcsim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "abcsim/csv.hpp"
#include "abcsim/errors.hpp"
#include "json.hpp"

namespace abc {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const char* code_version() { return "abcsim 1.0.0"; }

std::string manifest_hash(const RunConfig& c) {
    return fnv1a_hex(std::string(code_version()) + "\n" + config_to_json(c, false));
}

namespace {

std::string series_name(int n) { return "series_n" + std::to_string(n) + ".csv"; }
std::string blocks_name(int n) { return "blocks_n" + std::to_string(n) + ".csv"; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError(p.string() + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError(p.string() + ": cannot write");
    out << text;
    if (!out) throw IoError(p.string() + ": write failed");
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::string line;
    std::getline(in, line);
    return line;
}

} // namespace

Manifest simulate_to_dir(const RunConfig& c, const std::string& dir, const ProgressFn& progress) {
    validate_config(c);
    Manifest m;
    m.hash = manifest_hash(c);
    m.version = code_version();
    m.config = c;
    fs::create_directories(dir);
    // a stale manifest must not vouch for files being rewritten
    fs::remove(fs::path(dir) / "manifest.json");
    fs::remove(fs::path(dir) / "battery.csv");
    auto runs = run_ensemble(c.plan, progress);
    for (const auto& r : runs) {
        write_series_csv((fs::path(dir) / series_name(r.n)).string(), r.series, m.hash);
        m.files.push_back(series_name(r.n));
        if (!c.plan.fields.block_eps.empty()) {
            write_blocks_csv((fs::path(dir) / blocks_name(r.n)).string(), r.blocks, m.hash);
            m.files.push_back(blocks_name(r.n));
        }
    }
    json j;
    j["hash"] = m.hash;
    j["version"] = m.version;
    j["config"] = json::parse(config_to_json(c, false));
    j["files"] = m.files;
    write_text(fs::path(dir) / "manifest.json", j.dump(2) + "\n");
    return m;
}

Manifest read_manifest(const std::string& dir) {
    const fs::path p = fs::path(dir) / "manifest.json";
    if (!fs::exists(p)) throw IoError(p.string() + ": missing manifest (run simulate first)");
    json j;
    try {
        j = json::parse(slurp(p));
    } catch (const json::exception& e) {
        throw IoError(p.string() + ": malformed manifest (" + e.what() + ")");
    }
    Manifest m;
    try {
        m.hash = j.at("hash").get<std::string>();
        m.version = j.at("version").get<std::string>();
        m.files = j.at("files").get<std::vector<std::string>>();
        m.config = parse_config(j.at("config").dump());
    } catch (const json::exception& e) {
        throw IoError(p.string() + ": malformed manifest (" + e.what() + ")");
    } catch (const ConfigError& e) {
        throw IoError(p.string() + ": invalid embedded config (" + e.what() + ")");
    }
    if (manifest_hash(m.config) != m.hash)
        throw IoError(p.string() + ": manifest hash does not match its configuration (different code version?)");
    return m;
}

std::vector<LoadedRun> load_runs(const std::string& dir, const Manifest& m) {
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        const bool ours = name.rfind("series_", 0) == 0 || name.rfind("blocks_", 0) == 0;
        if (!ours || e.path().extension() != ".csv") continue;
        if (first_line(e.path()) != "# manifest: " + m.hash)
            throw IoError(e.path().string() + ": manifest hash differs from manifest.json (mixed runs)");
        if (std::find(m.files.begin(), m.files.end(), name) == m.files.end())
            throw IoError(e.path().string() + ": not listed in manifest.json (mixed runs)");
    }
    std::vector<LoadedRun> runs;
    for (int n : m.config.plan.ns) {
        LoadedRun r;
        r.n = n;
        std::string h;
        r.series = read_series_csv((fs::path(dir) / series_name(n)).string(), &h);
        if (h != m.hash) throw IoError(series_name(n) + ": manifest hash mismatch");
        if (!m.config.plan.fields.block_eps.empty()) {
            r.blocks = read_blocks_csv((fs::path(dir) / blocks_name(n)).string(), &h);
            if (h != m.hash) throw IoError(blocks_name(n) + ": manifest hash mismatch");
        }
        runs.push_back(std::move(r));
    }
    return runs;
}

namespace {

struct Scale {
    ModelParams params;
    KernelTables tables;
    RateModel rates;
    NormalModeConstants k;

    explicit Scale(const ModelParams& p)
        : params(p), tables(p), rates(RateModel::from_params(p)), k(normal_mode_constants(p, tables)) {}
};

double qv_mean_reference(const Scale& s, const TestFunction& H, const std::vector<double>& times, std::size_t k,
                         Sign sign) {
    const auto m = s.k.mode(sign);
    double acc = 0.0;
    double prev = qv_increment_mean(H, s.params.n, times[0], m, s.tables, s.rates, s.params.densities);
    for (std::size_t j = 1; j <= k; ++j) {
        double cur = qv_increment_mean(H, s.params.n, times[j], m, s.tables, s.rates, s.params.densities);
        acc += 0.5 * (times[j] - times[j - 1]) * (prev + cur);
        prev = cur;
    }
    return acc;
}

} // namespace

std::vector<TestOutcome> run_battery(const RunConfig& c, const std::vector<LoadedRun>& runs,
                                     const std::vector<TestSpec>& tests) {
    const double thr = bonferroni_threshold(tests.size());
    const auto& H = c.plan.test_function;
    std::map<int, std::unique_ptr<Scale>> scales;
    std::vector<EstimatorReport> reports;
    for (const auto& spec0 : tests) {
        const TestSpec t = resolve_test(spec0, c);
        auto run = std::find_if(runs.begin(), runs.end(), [&](const LoadedRun& r) { return r.n == t.n; });
        if (run == runs.end()) throw ConfigError("test " + t.name + ": no ensemble at n = " + std::to_string(t.n));
        if (run->series.size() < 2) throw ConfigError("test " + t.name + ": at least 2 trajectories are required");
        auto& sc = scales[t.n];
        if (!sc) sc = std::make_unique<Scale>(c.plan.params_for(t.n));
        const int si = index_of(t.sign);
        const auto m = sc->k.mode(t.sign);
        const std::size_t k = time_index(run->series[0], t.t);
        const double tk = run->series[0].t[k];
        std::vector<double> v;
        double ref = 0.0;
        auto col = [&](const std::array<std::vector<double>, 2> FieldSeries::*f, int sgn, std::size_t idx) {
            return across(run->series, f, sign_at(sgn), idx);
        };
        if (t.kind == "field_mean") {
            v = col(&FieldSeries::z, si, k);
        } else if (t.kind == "static_variance") {
            v = col(&FieldSeries::z, si, k);
            for (auto& x : v) x *= x;
            auto h = periodized_profile(H, t.n, sc->params.lattice_size, tk * m.v);
            double norm = 0.0;
            for (double y : h) norm += y * y;
            ref = m.d3 * norm / t.n;
        } else if (t.kind == "cross_covariance") {
            auto a = col(&FieldSeries::z, 0, k), b = col(&FieldSeries::z, 1, k);
            for (std::size_t i = 0; i < a.size(); ++i) v.push_back(a[i] * b[i]);
        } else if (t.kind == "autocovariance") {
            auto a = col(&FieldSeries::z, si, k), b = col(&FieldSeries::z, si, 0);
            for (std::size_t i = 0; i < a.size(); ++i) v.push_back(a[i] * b[i]);
            OuReference ou(sc->tables, t.n, m.lambda, sc->params.k_n(), m.d3);
            ref = ou.covariance(H, H, tk);
        } else if (t.kind == "martingale_mean") {
            v = col(&FieldSeries::m, si, k);
        } else if (t.kind == "martingale_variance") {
            auto a = col(&FieldSeries::m, si, k), q = col(&FieldSeries::qv, si, k);
            for (std::size_t i = 0; i < a.size(); ++i) v.push_back(a[i] * a[i] - q[i]);
        } else if (t.kind == "qv_mean") {
            v = col(&FieldSeries::qv, si, k);
            ref = qv_mean_reference(*sc, H, run->series[0].t, k, t.sign);
        } else if (t.kind == "nonlinear_mean") {
            v = col(&FieldSeries::b, si, k);
        } else if (t.kind == "integral_mean") {
            v = col(&FieldSeries::i, si, k);
        } else if (t.kind == "energy_mean") {
            if (run->blocks.empty()) throw ConfigError("test " + t.name + ": no block observables were simulated");
            const auto& eps = run->blocks[0].eps;
            auto it = std::find(eps.begin(), eps.end(), t.eps);
            if (it == eps.end()) throw ConfigError("test " + t.name + ": eps not simulated");
            const std::size_t e = it - eps.begin();
            for (const auto& b : run->blocks) v.push_back(b.energy[e][si]);
        } else {
            throw ConfigError("test " + t.name + ": unknown kind");
        }
        auto r = iid_estimate(v, t.name);
        r.reference = ref * t.reference_scale;
        reports.push_back(r);
    }
    return test_limit_prediction(reports, thr);
}

void write_battery_csv(const std::string& path, const std::vector<TestOutcome>& rows, const std::string& hash) {
    CsvWriter w(path, {"test_name", "estimate", "reference", "se", "z", "pass"}, hash);
    for (const auto& r : rows)
        w.row({r.name, format_double(r.estimate), format_double(r.reference), format_double(r.se), format_double(r.z),
               r.pass ? "true" : "false"});
    w.close();
}

std::vector<TestOutcome> read_battery_csv(const std::string& path, std::string* hash) {
    auto t = read_csv(path);
    if (hash) *hash = t.manifest_hash;
    std::vector<TestOutcome> out;
    for (const auto& r : t.rows) {
        if (r.size() != 6) throw IoError(path + ": ragged row");
        TestOutcome o;
        o.name = r[0];
        o.estimate = std::stod(r[1]);
        o.reference = std::stod(r[2]);
        o.se = std::stod(r[3]);
        o.z = std::stod(r[4]);
        o.pass = r[5] == "true";
        out.push_back(o);
    }
    return out;
}

std::vector<TestOutcome> analyze_dir(const std::string& dir, const std::vector<TestSpec>* tests) {
    if (!fs::is_directory(dir)) throw IoError(dir + ": not a directory");
    Manifest m = read_manifest(dir);
    auto runs = load_runs(dir, m);
    std::vector<TestSpec> battery;
    if (tests && !tests->empty())
        battery = *tests;
    else if (!m.config.tests.empty())
        battery = m.config.tests;
    else
        battery = default_battery(m.config);
    RunConfig checked = m.config;
    checked.tests = battery;
    validate_config(checked);
    auto rows = run_battery(m.config, runs, battery);
    const double thr = bonferroni_threshold(rows.size());
    for (auto& r : rows) r.threshold = thr;
    // write to a temporary name so a failure leaves no partial battery
    const fs::path tmp = fs::path(dir) / "battery.csv.tmp";
    write_battery_csv(tmp.string(), rows, m.hash);
    fs::rename(tmp, fs::path(dir) / "battery.csv");
    return rows;
}

std::string report_dir(const std::string& dir, bool* all_pass) {
    Manifest m = read_manifest(dir);
    const fs::path bp = fs::path(dir) / "battery.csv";
    if (!fs::exists(bp)) throw IoError(bp.string() + ": missing (run analyze first)");
    std::string h;
    auto rows = read_battery_csv(bp.string(), &h);
    if (h != m.hash) throw IoError(bp.string() + ": manifest hash differs from manifest.json");
    const auto& p = m.config.plan;
    std::ostringstream o;
    char buf[256];
    o << "manifest " << m.hash << " (" << m.version << ")\n";
    std::snprintf(buf, sizeof buf, "gamma=%g asymmetry=%g K=%g*n^-%g seed=%llu trajectories=%zu horizon=%g\n",
                  p.params.gamma, m.config.asymmetry, p.params.kn.kappa0, p.params.kn.beta,
                  static_cast<unsigned long long>(p.seed), p.trajectories, p.fields.horizon);
    o << buf;
    o << "ns:";
    for (int n : p.ns) o << ' ' << n << " (L=" << p.params_for(n).lattice_size << ")";
    o << "\n";
    const double thr = bonferroni_threshold(rows.size());
    std::snprintf(buf, sizeof buf, "threshold |z| <= %.3f over %zu tests\n\n", thr, rows.size());
    o << buf;
    std::snprintf(buf, sizeof buf, "%-44s %14s %14s %12s %8s  %s\n", "test", "estimate", "reference", "se", "z", "result");
    o << buf;
    std::size_t fails = 0;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-44s %14.6g %14.6g %12.4g %8.3f  %s\n", r.name.c_str(), r.estimate,
                      r.reference, r.se, r.z, r.pass ? "PASS" : "FAIL");
        o << buf;
        if (!r.pass) ++fails;
    }
    o << "\n" << rows.size() - fails << " of " << rows.size() << " tests passed\n";
    write_text(fs::path(dir) / "report.txt", o.str());
    if (all_pass) *all_pass = fails == 0;
    return o.str();
}

} // namespace abc
