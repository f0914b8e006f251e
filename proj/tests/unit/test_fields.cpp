#include <cmath>

#include "abcsim/exact.hpp"
#include "abcsim/fields.hpp"
#include "abcsim/errors.hpp"
#include "doctest.h"

using namespace abc;

namespace {
const std::array<double, 3> kThird{1.0 / 3, 1.0 / 3, 1.0 / 3};

ModelParams params(double gamma, double asym, double k, int n, int L, std::array<double, 3> E = {1.0, 0.0, -1.0}) {
    ModelParams p;
    p.set_kernel(gamma, asym);
    p.kn = {k, 0.0};
    p.n = n;
    p.lattice_size = L;
    p.energies = E;
    return p;
}
} // namespace

TEST_CASE("normal mode constants: canonical parameters") {
    auto p = params(1.5, 0.5, 0.2, 64, 4096);
    KernelTables t(p);
    auto k = normal_mode_constants(p, t);
    CHECK(k.delta == doctest::Approx(3.0));
    CHECK(k.lambda_plus == doctest::Approx(std::sqrt(3.0)));
    CHECK(k.lambda_minus == doctest::Approx(-std::sqrt(3.0)));
    CHECK(k.d2_plus == doctest::Approx((1 + std::sqrt(3.0)) / 2));
    CHECK(k.d2_minus == doctest::Approx((1 - std::sqrt(3.0)) / 2));
    CHECK(k.d3_plus == doctest::Approx(1.0 / 3));
    CHECK(k.d3_minus == doctest::Approx(1.0 / 3));
    CHECK(k.kappa_plus == doctest::Approx(2 * 0.2 * t.m_a));
    CHECK(k.kappa_minus == doctest::Approx(2 * 0.2 * t.m_a));
    CHECK(k.kappa_plus != 0.0);
    CHECK(std::abs(k.cross_identity()) < 1e-14);
}

TEST_CASE("normal mode constants: one vanishing coupling") {
    auto p = params(1.5, 0.5, 0.2, 64, 4096, {1.0, 1.0, 0.0});
    KernelTables t(p);
    auto k = normal_mode_constants(p, t);
    CHECK(k.delta == doctest::Approx(1.0));
    CHECK(k.kappa_minus == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(k.kappa_plus != doctest::Approx(0.0));
}

TEST_CASE("normal mode constants: degenerate energies rejected") {
    auto p = params(1.0, 0.0, 0.1, 64, 4096, {0.5, 0.0, 0.5});
    CHECK_THROWS_AS(normal_mode_constants(p), ParameterError);
}

TEST_CASE("cross identity vanishes for arbitrary energies") {
    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        auto p = params(1.0, 0.0, 0.05, 64, 4096,
                        {2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1});
        p.d1 = 0.5 + uniform01(rng);
        if (std::abs(p.energies[A] - p.energies[C]) < 0.05) continue;
        auto k = normal_mode_constants(p);
        if (k.delta <= 0) continue;
        CHECK(std::abs(k.cross_identity()) < 1e-12);
        CHECK(k.d3_plus > 0.0);
        CHECK(k.d3_minus > 0.0);
    }
}

TEST_CASE("fluctuation field of a constant configuration") {
    Configuration c(std::vector<std::uint8_t>(256, A));
    auto H = TestFunction::gaussian(0.0, 1.0);
    double s = 0;
    for (int x = 0; x < 256; ++x) {
        double xt = x < 128 ? x : x - 256;
        s += H(xt / 8.0);
    }
    CHECK(fluctuation_field(c, H, 8, A, 0.0, kThird) == doctest::Approx(2.0 / 3 * s / std::sqrt(8.0)));
    CHECK(fluctuation_field(c, H, 8, B, 0.0, kThird) == doctest::Approx(-1.0 / 3 * s / std::sqrt(8.0)));
}

TEST_CASE("normal field at t = 0 is the plain combination") {
    auto p = params(1.5, 0.5, 0.2, 8, 256);
    auto k = normal_mode_constants(p);
    auto H = TestFunction::gaussian(0.3, 0.7);
    Rng rng(32);
    auto c = sample_invariant(kThird, 256, rng);
    for (Sign s : {Sign::plus, Sign::minus}) {
        auto m = k.mode(s);
        double ya = fluctuation_field(c, H, 8, A, 0.0, kThird), yb = fluctuation_field(c, H, 8, B, 0.0, kThird);
        CHECK(normal_field(c, H, 8, s, 0.0, k, kThird) == doctest::Approx(m.d1 * ya + m.d2 * yb).epsilon(1e-13));
    }
}

TEST_CASE("fields are translation covariant") {
    const int n = 8, L = 256;
    auto p = params(1.5, 0.5, 0.2, n, L);
    KernelTables t(p);
    auto r = RateModel::from_params(p);
    auto k = normal_mode_constants(p, t);
    auto H = TestFunction::gaussian(0.0, 0.6);
    auto Hs = H.shifted(1.0);
    Rng rng(33);
    auto c = sample_invariant(kThird, L, rng);
    std::vector<std::uint8_t> rot(L);
    for (int x = 0; x < L; ++x) rot[(x + n) % L] = static_cast<std::uint8_t>(c[x]);
    Configuration cs(rot);
    for (Sign s : {Sign::plus, Sign::minus}) {
        const double tt = 0.05;
        CHECK(normal_field(cs, Hs, n, s, tt, k, kThird) == doctest::Approx(normal_field(c, H, n, s, tt, k, kThird)).epsilon(1e-11));
        CHECK(qv_increment(cs, Hs, n, tt, s, k, t, r, kThird, 64) ==
              doctest::Approx(qv_increment(c, H, n, tt, s, k, t, r, kThird, 64)).epsilon(1e-11));
        CHECK(nonlinear_term_increment(cs, Hs, n, tt, s, k, t, p.k_n(), kThird, 64).combined ==
              doctest::Approx(nonlinear_term_increment(c, H, n, tt, s, k, t, p.k_n(), kThird, 64).combined).epsilon(1e-10));
    }
}

TEST_CASE("nonlinear term vanishes without coupling or asymmetry") {
    auto H = TestFunction::gaussian(0.0, 0.6);
    Rng rng(34);
    auto c = sample_invariant(kThird, 256, rng);
    {
        auto p = params(1.5, 0.5, 0.0, 8, 256);
        KernelTables t(p);
        auto k = normal_mode_constants(p, t);
        auto b = nonlinear_term_increment(c, H, 8, 0.1, Sign::plus, k, t, 0.0, kThird, 64);
        CHECK(b.combined == 0.0);
        for (double v : b.pair) CHECK(v == 0.0);
    }
    {
        auto p = params(1.5, 0.0, 0.2, 8, 256);
        KernelTables t(p);
        auto k = normal_mode_constants(p, t);
        auto b = nonlinear_term_increment(c, H, 8, 0.1, Sign::minus, k, t, p.k_n(), kThird, 64);
        CHECK(b.combined == 0.0);
    }
}

TEST_CASE("quadratic variation integrand: sign, and exact mean") {
    const int L = 6;
    auto p = params(1.5, 0.5, 0.2, 1, L);
    KernelTables t(p);
    auto r = RateModel::from_params(p);
    auto k = normal_mode_constants(p, t);
    auto H = TestFunction::bump(0.3, 2.5);
    auto pi = product_measure(kThird, L);
    for (Sign s : {Sign::plus, Sign::minus}) {
        double mean = 0;
        for (std::uint64_t i = 0; i < pi.size(); ++i) {
            auto c = Configuration::from_state_index(i, L);
            double q = qv_increment(c, H, 1, 0.2, s, k, t, r, kThird, L / 2);
            CHECK(q >= 0.0);
            mean += pi[i] * q;
        }
        CHECK(qv_increment_mean(H, 1, 0.2, k.mode(s), t, r, kThird) == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("Dynkin decomposition holds exactly on a small torus") {
    // Q Z = −∂_t Z + 𝓑 + 𝓘 and Q Z² − 2 Z Q Z = qv, state by state
    const int L = 6;
    for (auto E : {std::array<double, 3>{1, 0, -1}, std::array<double, 3>{1, 1, 0}})
        for (double gamma : {0.7, 1.0, 1.5, 3.0}) {
            auto p = params(gamma, 0.5, 0.2, 1, L, E);
            KernelTables t(p);
            auto r = RateModel::from_params(p);
            auto k = normal_mode_constants(p, t);
            auto H = TestFunction::bump(0.3, 2.5);
            auto Q = exact_generator(t, r);
            const int S = Q.rows;
            const double tt = 0.37;
            for (Sign s : {Sign::plus, Sign::minus}) {
                auto m = k.mode(s);
                std::vector<double> Z(S), Z2(S);
                for (int i = 0; i < S; ++i) {
                    Z[i] = normal_field(Configuration::from_state_index(i, L), H, 1, s, tt, k, kThird);
                    Z2[i] = Z[i] * Z[i];
                }
                auto QZ = apply_generator(Q, Z), QZ2 = apply_generator(Q, Z2);
                auto g = periodized_gradient(H, 1, L, tt * m.v, false);
                double err = 0, errq = 0;
                for (int i = 0; i < S; ++i) {
                    auto c = Configuration::from_state_index(i, L);
                    double dz = 0;
                    for (int x = 0; x < L; ++x) dz -= m.v * g[x] * mode_value(c[x], m.d1, m.d2, kThird);
                    auto b = nonlinear_term_increment(c, H, 1, tt, s, k, t, p.k_n(), kThird, L / 2);
                    double I = integral_term_increment(c, H, 1, tt, s, k, t, p.k_n(), kThird);
                    double qv = qv_increment(c, H, 1, tt, s, k, t, r, kThird, L / 2);
                    err = std::max(err, std::abs(QZ[i] + dz - b.combined - I));
                    errq = std::max(errq, std::abs(QZ2[i] - 2 * Z[i] * QZ[i] - qv));
                }
                CAPTURE(gamma);
                CHECK(err < 1e-11);
                CHECK(errq < 1e-11);
            }
        }
}

TEST_CASE("field engine agrees with direct evaluation") {
    for (double gamma : {1.0, 1.5}) {
        auto p = params(gamma, 0.5, 0.2, 8, 128);
        auto H = TestFunction::gaussian(0.4, 0.8);
        FieldOptions o;
        o.horizon = 0.5;
        o.dt = 0.1;
        o.block_eps = {0.25, 0.4};
        o.block_refine = 2;
        FieldEngine eng(p, H, o);
        auto ws = eng.make_workspace();
        Rng rng(5);
        auto c = sample_invariant(kThird, 128, rng);
        const auto& k = eng.constants();
        double worst = 0;
        for (std::size_t ti = 0; ti < eng.sample_times().size(); ++ti) {
            const double tt = eng.sample_times()[ti];
            auto res = eng.evaluate(c, ti, *ws);
            for (int si = 0; si < 2; ++si) {
                Sign s = sign_at(si);
                auto b = nonlinear_term_increment(c, H, 8, tt, s, k, eng.tables(), p.k_n(), kThird, 64);
                worst = std::max({worst, std::abs(normal_field(c, H, 8, s, tt, k, kThird) - res[si].z),
                                  std::abs(b.combined - res[si].b),
                                  std::abs(integral_term_increment(c, H, 8, tt, s, k, eng.tables(), p.k_n(), kThird) - res[si].i),
                                  std::abs(qv_increment(c, H, 8, tt, s, k, eng.tables(), eng.rates(), kThird, 64) - res[si].qv)});
                for (int q = 0; q < 4; ++q) worst = std::max(worst, std::abs(b.pair[q] - res[si].b_pair[q]));
            }
        }
        CHECK(worst < 1e-10);

        std::vector<std::array<double, 2>> en;
        std::vector<std::array<std::array<double, 4>, 2>> sp;
        double bw = 0;
        for (std::size_t j = 0; j < eng.block_times().size(); ++j) {
            const double tt = eng.block_times()[j];
            eng.evaluate_blocks(c, j, *ws, en, sp);
            for (int e = 0; e < 2; ++e)
                for (int si = 0; si < 2; ++si) {
                    bw = std::max(bw, std::abs(energy_integrand(c, H, 8, sign_at(si), o.block_eps[e], tt, k, kThird) - en[e][si]));
                    for (int q = 0; q < 4; ++q)
                        bw = std::max(bw, std::abs(block_substitute_integrand(c, H, 8, sign_at(si), o.block_eps[e], tt,
                                                                              kPairAlpha[q], kPairBeta[q], k, eng.k_star(),
                                                                              eng.tables().m_a, kThird) -
                                                   sp[e][si][q]));
                }
        }
        CHECK(bw < 1e-10);
    }
}

TEST_CASE("static ensemble: variances and decorrelation of the modes") {
    const int n = 16, L = 512, N = 4000;
    auto p = params(1.5, 0.5, 0.2, n, L);
    auto k = normal_mode_constants(p);
    auto H = TestFunction::gaussian(0.0, 1.0);
    auto G = TestFunction::gaussian(0.5, 0.7);
    Rng rng(35);
    std::vector<double> zp, zm, ya, cross;
    for (int i = 0; i < N; ++i) {
        auto c = sample_invariant(kThird, L, rng);
        double a = normal_field(c, H, n, Sign::plus, 0.0, k, kThird);
        double b = normal_field(c, G, n, Sign::minus, 0.0, k, kThird);
        zp.push_back(a * a);
        zm.push_back(normal_field(c, H, n, Sign::minus, 0.0, k, kThird));
        ya.push_back(fluctuation_field(c, H, n, A, 0.0, kThird));
        cross.push_back(a * b);
    }
    auto stats = [](const std::vector<double>& v) {
        double m = 0, s = 0;
        for (double x : v) m += x;
        m /= v.size();
        for (double x : v) s += (x - m) * (x - m);
        return std::pair<double, double>{m, std::sqrt(s / (v.size() - 1) / v.size())};
    };
    const double h2 = discrete_l2_norm(H, n);
    auto [vp, sp] = stats(zp);
    CHECK(std::abs(vp - k.d3_plus * h2) < 4 * sp);
    auto [mz, sz] = stats(zm);
    CHECK(std::abs(mz) < 4 * sz);
    auto [my, sy] = stats(ya);
    CHECK(std::abs(my) < 4 * sy);
    auto [mc, sc] = stats(cross);
    CHECK(std::abs(mc) < 4 * sc);
}

TEST_CASE("block length and support checks") {
    CHECK(block_length(0.25, 64) == 16);
    CHECK_THROWS_AS(block_length(0.01, 64), ParameterError);
    CHECK_THROWS_AS(check_support_fits(TestFunction::gaussian(0.0, 4.0), 64, 256), ParameterError);
    CHECK_NOTHROW(check_support_fits(TestFunction::gaussian(0.0, 0.5), 64, 4096));
}

TEST_CASE("energy field with equal block sizes cancels") {
    auto p = params(1.5, 0.5, 0.2, 16, 512);
    auto k = normal_mode_constants(p);
    auto H = TestFunction::gaussian(0.0, 0.8);
    Rng rng(36);
    std::vector<Snapshot> traj;
    for (int i = 0; i <= 4; ++i) traj.push_back({0.1 * i, sample_invariant(kThird, 512, rng)});
    double a = energy_field(traj, H, 16, Sign::plus, 0.25, 0.0, 0.4, k, kThird);
    double b = energy_field(traj, H, 16, Sign::plus, 0.25, 0.0, 0.4, k, kThird);
    CHECK(a - b == 0.0);
    double manual = 0;
    for (int i = 0; i < 4; ++i)
        manual += 0.05 * (energy_integrand(traj[i].config, H, 16, Sign::plus, 0.25, traj[i].t, k, kThird) +
                          energy_integrand(traj[i + 1].config, H, 16, Sign::plus, 0.25, traj[i + 1].t, k, kThird));
    CHECK(a == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("series assembly") {
    std::vector<double> times;
    std::vector<std::array<ModeSample, 2>> samples;
    for (int j = 0; j <= 10; ++j) {
        double tt = 0.1 * j;
        times.push_back(tt);
        std::array<ModeSample, 2> s{};
        for (int q = 0; q < 2; ++q) {
            s[q].z = 1.0 + tt * tt;
            s[q].i = 2 * tt;
            s[q].b = 0.0;
            s[q].qv = 1.0 + tt;
        }
        samples.push_back(s);
    }
    auto fs = assemble_series(0, times, samples, 0.1, 64, {1.0, -1.0});
    for (int q = 0; q < 2; ++q) {
        CHECK(fs.m[q][0] == 0.0);
        CHECK(fs.i[q].back() == doctest::Approx(1.0));
        // z − z(0) = t² = ∫ 2s ds, so the residual vanishes
        for (double v : fs.m[q]) CHECK(std::abs(v) < 1e-14);
        for (std::size_t j = 1; j < fs.size(); ++j) CHECK(fs.qv[q][j] >= fs.qv[q][j - 1]);
        CHECK(fs.qv[q].back() == doctest::Approx(1.5));
    }
    CHECK(fs.warnings.empty());
    auto coarse = assemble_series(0, times, samples, 0.1, 4, {40.0, -40.0});
    CHECK_FALSE(coarse.warnings.empty());
}
