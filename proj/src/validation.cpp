#include "abcsim/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "abcsim/exact.hpp"
#include "abcsim/fields.hpp"
#include "abcsim/kernel.hpp"
#include "abcsim/lattice.hpp"
#include "abcsim/operators.hpp"
#include "abcsim/rng.hpp"

namespace abc {

namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

CheckResult below(std::string name, double value, double tol, std::string detail = "") {
    return {std::move(name), value, tol, std::isfinite(value) && value < tol, std::move(detail)};
}

ModelParams small_params(double gamma, double k) {
    ModelParams p;
    p.set_kernel(gamma, 0.5);
    p.kn = {k, 0.0};
    p.n = 2;
    p.lattice_size = 5;
    return p;
}

RateModel broken_table(double k) {
    RateModel r = RateModel::from_energies(k, {1.0, 0.0, -1.0});
    double t[3][3];
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) t[a][b] = r.rates[a][b];
    t[A][B] *= 1.3;
    return RateModel::custom(t);
}

void stationarity(std::vector<CheckResult>& out, bool broken) {
    for (double g : {1.0, 1.5, 3.0})
        for (double k : {0.0, 0.1}) {
            ModelParams p = small_params(g, k);
            RateModel br = broken_table(k);
            double res = verify_stationarity(p, 5, broken ? &br : nullptr);
            out.push_back(below(fmt("stationarity L=5 gamma=%g K=%g", g, k), res, 1e-10));
        }
}

void generator_identities(std::vector<CheckResult>& out, bool broken) {
    const int L = 7;
    ModelParams p = small_params(1.5, 0.1);
    p.lattice_size = L;
    KernelTables t(p);
    RateModel r = broken ? broken_table(0.1) : RateModel::from_params(p);
    DenseMatrix Q = exact_generator(t, r);
    const int states = Q.rows;

    struct Identity {
        const char* name;
        int mult; // -1: plain L ξ^alpha
        int alpha;
    };
    const Identity ids[] = {{"generator on xi^A", -1, A},     {"generator on xi^B", -1, B},
                            {"xi^A times generator on xi^A", A, A}, {"xi^B times generator on xi^A", B, A},
                            {"xi^A times generator on xi^B", A, B}, {"xi^B times generator on xi^B", B, B}};
    Rng rng(20240601);
    std::vector<int> picks(100);
    std::vector<int> sites(100);
    for (int i = 0; i < 100; ++i) {
        picks[i] = static_cast<int>(uniform_index(rng, states));
        sites[i] = static_cast<int>(uniform_index(rng, L));
    }
    for (const auto& id : ids) {
        double worst = 0.0;
        for (int z = 0; z < L; ++z) {
            std::vector<double> f(states);
            for (int s = 0; s < states; ++s) f[s] = Configuration::from_state_index(s, L)[z] == id.alpha ? 1.0 : 0.0;
            auto qf = apply_generator(Q, f);
            for (int i = 0; i < 100; ++i) {
                if (sites[i] != z) continue;
                Configuration c = Configuration::from_state_index(picks[i], L);
                double direct = qf[picks[i]] / t.theta_n;
                double closed;
                if (id.mult < 0) {
                    closed = generator_on_indicator(c, z, id.alpha, t, RateModel::from_params(p));
                } else {
                    direct *= c[z] == id.mult ? 1.0 : 0.0;
                    closed = indicator_times_generator(c, z, id.mult, id.alpha, t, RateModel::from_params(p));
                }
                worst = std::max(worst, std::abs(direct - closed));
            }
        }
        out.push_back(below(std::string(id.name) + " (L=7, 100 configurations)", worst, 1e-12));
    }
}

void constants(std::vector<CheckResult>& out, bool broken) {
    ModelParams p;
    p.set_kernel(1.0, 0.5);
    p.kn = {0.1, 0.0};
    RateModel r = broken ? broken_table(0.1) : RateModel::from_params(p);
    out.push_back(below("pairwise balance", std::abs(r.balance_residual()), 1e-14));

    auto k = normal_mode_constants(p);
    out.push_back(below("delta canonical", std::abs(k.delta - 3.0), 1e-12));
    out.push_back(below("d3 canonical", std::max(std::abs(k.d3_plus - 1.0 / 3), std::abs(k.d3_minus - 1.0 / 3)), 1e-12));
    out.push_back(below("time scale gamma=2 n=100", std::abs(theta(100, 2.0) - 1e4 / std::log(100.0)), 1e-9));

    Rng rng(77);
    double worst_cross = 0.0, worst_pair = 0.0;
    for (int i = 0; i < 20; ++i) {
        ModelParams q;
        q.set_kernel(1.0 + uniform01(rng), 2 * uniform01(rng) - 1);
        for (;;) {
            for (auto& e : q.energies) e = 2 * uniform01(rng) - 1;
            double dlt = (q.energies[A] - q.energies[B]) * (q.energies[A] - q.energies[B]) -
                         (q.energies[A] - q.energies[C]) * (q.energies[C] - q.energies[B]);
            if (dlt > 0.05 && std::abs(q.energies[A] - q.energies[C]) > 0.05) break;
        }
        double u = 0.1 + 0.4 * uniform01(rng), v = 0.1 + 0.4 * uniform01(rng);
        q.densities = {u, v, 1 - u - v};
        q.d1 = 0.5 + uniform01(rng);
        q.kn = {0.2 * uniform01(rng), 0.0};
        auto kq = normal_mode_constants(q);
        worst_cross = std::max(worst_cross, std::abs(kq.cross_identity()));
        RateModel rq = broken ? r : RateModel::from_params(q);
        for (Sign s : {Sign::plus, Sign::minus}) {
            auto m = kq.mode(s);
            double e = pair_expectation(q.densities, m.d1, m.d2, rq);
            worst_pair = std::max(worst_pair, std::abs(e - 2.0 * m.d3));
        }
    }
    out.push_back(below("cross identity (20 parameter sets)", worst_cross, 1e-12));
    out.push_back(below("pair expectation equals 2*D3 (20 parameter sets)", worst_pair, 1e-12));
}

void convergence(std::vector<CheckResult>& out) {
    const TestFunction fs[3] = {TestFunction::gaussian(0, 0.5), TestFunction::bump(0, 1.0),
                                TestFunction::modulated_gaussian(0, 0.5, 1.0)};
    for (double g : {0.5, 1.0, 1.5, 3.0})
        for (const auto& H : fs) {
            auto rows = operator_convergence(H, g, {32, 64, 128, 256}, 0.5, std::sqrt(3.0), 0.1);
            // worst ratio err(2n)/err(n); below 1 means monotone decrease
            double worst = 0.0;
            for (std::size_t i = 1; i < rows.size(); ++i) {
                worst = std::max(worst, rows[i].err_sym / rows[i - 1].err_sym);
                if (rows[i - 1].err_asym > 1e-300) worst = std::max(worst, rows[i].err_asym / rows[i - 1].err_asym);
            }
            out.push_back(below(fmt("operator convergence gamma=%g ", g) + to_string(H.family()), worst, 1.0,
                                fmt("err_sym(256)=%.3g err_asym(256)=%.3g", rows.back().err_sym, rows.back().err_asym)));
        }
}

} // namespace

std::vector<CheckResult> run_validation(const ValidationOptions& options) {
    std::vector<CheckResult> out;
    constants(out, options.broken_rates);
    stationarity(out, options.broken_rates);
    generator_identities(out, options.broken_rates);
    if (options.operator_convergence) convergence(out);
    return out;
}

} // namespace abc
