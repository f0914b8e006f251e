#include "abcsim/abcsim.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "abcsim/config.hpp"
#include "abcsim/errors.hpp"
#include "abcsim/pipeline.hpp"
#include "abcsim/validation.hpp"

struct abc_config {
    abc::RunConfig cfg;
};

struct abc_table {
    struct Row {
        std::string name, detail;
        double estimate, reference, se, z, threshold;
        bool pass;
    };
    std::vector<Row> rows;
};

namespace {

thread_local std::string g_error;

template <class F>
abc_status guarded(F&& f) {
    try {
        g_error.clear();
        f();
        return ABC_OK;
    } catch (const abc::ParameterError& e) {
        g_error = e.what();
        return ABC_ERR_PARAMETER;
    } catch (const abc::ConfigError& e) {
        g_error = e.what();
        return ABC_ERR_CONFIG;
    } catch (const abc::IoError& e) {
        g_error = e.what();
        return ABC_ERR_IO;
    } catch (const abc::NumericalError& e) {
        g_error = e.what();
        return ABC_ERR_NUMERIC;
    } catch (const std::bad_alloc&) {
        g_error = "out of memory";
        return ABC_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_error = e.what();
        return ABC_ERR_INTERNAL;
    } catch (...) {
        g_error = "unknown error";
        return ABC_ERR_INTERNAL;
    }
}

abc_status bad_argument(const char* what) {
    g_error = what;
    return ABC_ERR_ARGUMENT;
}

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

abc_table* to_table(const std::vector<abc::TestOutcome>& rows) {
    auto* t = new abc_table;
    for (const auto& r : rows) t->rows.push_back({r.name, "", r.estimate, r.reference, r.se, r.z, r.threshold, r.pass});
    return t;
}

} // namespace

extern "C" {

const char* abc_last_error(void) { return g_error.c_str(); }

const char* abc_version(void) { return abc::code_version(); }

const char* abc_status_name(abc_status s) {
    switch (s) {
    case ABC_OK: return "ok";
    case ABC_ERR_ARGUMENT: return "invalid argument";
    case ABC_ERR_PARAMETER: return "parameter error";
    case ABC_ERR_CONFIG: return "configuration error";
    case ABC_ERR_IO: return "i/o error";
    case ABC_ERR_NUMERIC: return "numerical error";
    case ABC_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

abc_status abc_config_default(abc_config** out) {
    if (!out) return bad_argument("abc_config_default: out is null");
    return guarded([&] { *out = new abc_config{abc::parse_config("{}")}; });
}

abc_status abc_config_parse(const char* json_text, abc_config** out) {
    if (!json_text || !out) return bad_argument("abc_config_parse: null argument");
    return guarded([&] { *out = new abc_config{abc::parse_config(json_text)}; });
}

abc_status abc_config_load(const char* path, abc_config** out) {
    if (!path || !out) return bad_argument("abc_config_load: null argument");
    return guarded([&] {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw abc::ConfigError(std::string(path) + ": cannot open config file");
        std::ostringstream ss;
        ss << in.rdbuf();
        *out = new abc_config{abc::parse_config(ss.str())};
    });
}

void abc_config_free(abc_config* c) { delete c; }

abc_status abc_config_set_seed(abc_config* c, uint64_t seed) {
    if (!c) return bad_argument("abc_config_set_seed: null config");
    c->cfg.plan.seed = seed;
    return ABC_OK;
}

abc_status abc_config_set_threads(abc_config* c, int threads) {
    if (!c) return bad_argument("abc_config_set_threads: null config");
    if (threads < 1) {
        g_error = "threads: must be at least 1";
        return ABC_ERR_CONFIG;
    }
    c->cfg.plan.threads = threads;
    return ABC_OK;
}

abc_status abc_config_set_out(abc_config* c, const char* dir) {
    if (!c || !dir) return bad_argument("abc_config_set_out: null argument");
    return guarded([&] { c->cfg.out = dir; });
}

abc_status abc_config_out(const abc_config* c, const char** dir) {
    if (!c || !dir) return bad_argument("abc_config_out: null argument");
    *dir = c->cfg.out.c_str();
    return ABC_OK;
}

abc_status abc_config_to_json(const abc_config* c, char** json_text) {
    if (!c || !json_text) return bad_argument("abc_config_to_json: null argument");
    return guarded([&] { *json_text = dup_string(abc::config_to_json(c->cfg)); });
}

void abc_string_free(char* s) { std::free(s); }

abc_status abc_config_constants(const abc_config* c, int n, abc_constants* out) {
    if (!c || !out) return bad_argument("abc_config_constants: null argument");
    return guarded([&] {
        const auto& plan = c->cfg.plan;
        if (n == 0) n = *std::max_element(plan.ns.begin(), plan.ns.end());
        auto p = plan.params_for(n);
        abc::KernelTables t(p);
        auto k = abc::normal_mode_constants(p, t);
        auto h = abc::classify_hypothesis(p);
        *out = abc_constants{};
        out->delta = k.delta;
        out->lambda[0] = k.lambda_plus;
        out->lambda[1] = k.lambda_minus;
        out->d2[0] = k.d2_plus;
        out->d2[1] = k.d2_minus;
        out->d3[0] = k.d3_plus;
        out->d3[1] = k.d3_minus;
        out->v[0] = k.v_plus;
        out->v[1] = k.v_minus;
        out->kappa[0] = k.kappa_plus;
        out->kappa[1] = k.kappa_minus;
        out->d4 = k.d4;
        out->d5[0] = k.d5_plus;
        out->d5[1] = k.d5_minus;
        out->d6[0] = k.d6_plus;
        out->d6[1] = k.d6_minus;
        out->theta_n = t.theta_n;
        out->m_a = t.m_a;
        out->k_n = p.k_n();
        out->k_star = h.k_star;
    });
}

abc_status abc_validate(int broken_rates, abc_table** out) {
    if (!out) return bad_argument("abc_validate: out is null");
    return guarded([&] {
        abc::ValidationOptions o;
        o.broken_rates = broken_rates != 0;
        auto checks = abc::run_validation(o);
        auto* t = new abc_table;
        for (const auto& r : checks) t->rows.push_back({r.name, r.detail, r.value, 0.0, 0.0, 0.0, r.tolerance, r.pass});
        *out = t;
    });
}

abc_status abc_simulate(const abc_config* c, const char* dir, abc_progress_fn progress, void* user) {
    if (!c) return bad_argument("abc_simulate: null config");
    return guarded([&] {
        abc::ProgressFn fn;
        if (progress) fn = [progress, user](int n, std::size_t done, std::size_t total) { progress(n, done, total, user); };
        abc::simulate_to_dir(c->cfg, dir ? std::string(dir) : c->cfg.out, fn);
    });
}

abc_status abc_analyze(const char* dir, const abc_config* tests_from, abc_table** out) {
    if (!dir || !out) return bad_argument("abc_analyze: null argument");
    return guarded([&] {
        auto rows = abc::analyze_dir(dir, tests_from ? &tests_from->cfg.tests : nullptr);
        *out = to_table(rows);
    });
}

abc_status abc_report(const char* dir, char** text, int* all_pass) {
    if (!dir || !text) return bad_argument("abc_report: null argument");
    return guarded([&] {
        bool ok = false;
        *text = dup_string(abc::report_dir(dir, &ok));
        if (all_pass) *all_pass = ok ? 1 : 0;
    });
}

size_t abc_table_size(const abc_table* t) { return t ? t->rows.size() : 0; }

abc_status abc_table_row(const abc_table* t, size_t i, abc_row* row) {
    if (!t || !row) return bad_argument("abc_table_row: null argument");
    if (i >= t->rows.size()) return bad_argument("abc_table_row: index out of range");
    const auto& r = t->rows[i];
    *row = {r.name.c_str(), r.estimate, r.reference, r.se, r.z, r.threshold, r.pass ? 1 : 0, r.detail.c_str()};
    return ABC_OK;
}

int abc_table_all_pass(const abc_table* t) {
    if (!t) return 0;
    for (const auto& r : t->rows)
        if (!r.pass) return 0;
    return 1;
}

void abc_table_free(abc_table* t) { delete t; }

} // extern "C"
