// Command-line front end; talks to the library only through abcsim.h.
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "abcsim/abcsim.h"

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

int report_error(const char* what, abc_status s) {
    std::fprintf(stderr, "abcsim %s: %s: %s\n", what, abc_status_name(s), abc_last_error());
    return kUsage;
}

void print_table(const abc_table* t, bool checks) {
    abc_row r;
    for (size_t i = 0; i < abc_table_size(t); ++i) {
        abc_table_row(t, i, &r);
        if (checks)
            std::printf("%-56s %s  value=%-11.3g tol=%-8.2g %s\n", r.name, r.pass ? "PASS" : "FAIL", r.estimate,
                        r.threshold, r.detail);
        else
            std::printf("%-44s %s  est=%-12.6g ref=%-12.6g se=%-10.4g z=%-8.3f\n", r.name, r.pass ? "PASS" : "FAIL",
                        r.estimate, r.reference, r.se, r.z);
    }
}

void progress(int n, size_t done, size_t total, void*) {
    if (done == total || done % 50 == 0) std::fprintf(stderr, "n=%d: %zu/%zu trajectories\n", n, done, total);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ABC exclusion process with long jumps: fluctuation-field experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 0;
    auto* o_config = app.add_option("--config", config_path, "JSON run configuration");
    auto* o_seed = app.add_option("--seed", seed, "master seed (overrides the config)");
    auto* o_out = app.add_option("--out", out_dir, "output directory (overrides the config)");
    auto* o_threads = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "deterministic oracle suite");
    bool broken = false;
    validate->add_flag("--inject-broken-rates", broken, "replace the rates by a table violating pairwise balance");
    auto* simulate = app.add_subcommand("simulate", "simulate the configured ensembles into the output directory");
    auto* analyze = app.add_subcommand("analyze", "run the test battery on a simulate output directory");
    auto* report = app.add_subcommand("report", "summarize battery.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    if (validate->parsed()) {
        abc_table* t = nullptr;
        abc_status s = abc_validate(broken ? 1 : 0, &t);
        if (s != ABC_OK) return report_error("validate", s);
        print_table(t, true);
        const bool ok = abc_table_all_pass(t);
        std::printf("%s\n", ok ? "all checks passed" : "some checks FAILED");
        abc_table_free(t);
        return ok ? kPass : kFail;
    }

    abc_config* cfg = nullptr;
    abc_status s = *o_config ? abc_config_load(config_path.c_str(), &cfg) : abc_config_default(&cfg);
    if (s != ABC_OK) return report_error("config", s);
    if (*o_seed) abc_config_set_seed(cfg, seed);
    if (*o_threads && (s = abc_config_set_threads(cfg, threads)) != ABC_OK) {
        abc_config_free(cfg);
        return report_error("config", s);
    }
    if (*o_out) abc_config_set_out(cfg, out_dir.c_str());
    const char* dir = nullptr;
    abc_config_out(cfg, &dir);
    const std::string target = dir;

    int code = kPass;
    if (simulate->parsed()) {
        s = abc_simulate(cfg, target.c_str(), progress, nullptr);
        if (s != ABC_OK)
            code = report_error("simulate", s);
        else
            std::printf("wrote %s/manifest.json\n", target.c_str());
    } else if (analyze->parsed()) {
        abc_table* t = nullptr;
        s = abc_analyze(target.c_str(), *o_config ? cfg : nullptr, &t);
        if (s != ABC_OK) {
            code = report_error("analyze", s);
        } else {
            print_table(t, false);
            code = abc_table_all_pass(t) ? kPass : kFail;
            std::printf("wrote %s/battery.csv\n", target.c_str());
            abc_table_free(t);
        }
    } else if (report->parsed()) {
        char* text = nullptr;
        int ok = 0;
        s = abc_report(target.c_str(), &text, &ok);
        if (s != ABC_OK) {
            code = report_error("report", s);
        } else {
            std::fputs(text, stdout);
            abc_string_free(text);
            code = ok ? kPass : kFail;
        }
    }
    abc_config_free(cfg);
    return code;
}
