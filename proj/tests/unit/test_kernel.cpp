#include <boost/math/special_functions/zeta.hpp>
#include <cmath>

#include "abcsim/errors.hpp"
#include "abcsim/kernel.hpp"
#include "doctest.h"

using namespace abc;

TEST_CASE("normalize_kernel examples") {
    auto k = normalize_kernel(1.0, 0.0);
    CHECK(k.c_gamma == doctest::Approx(0.3039635).epsilon(1e-7));
    CHECK(k.c_plus == k.c_minus);
    for (double g : {0.3, 1.0, 2.5, 4.0}) {
        auto s = normalize_kernel(g, 0.0);
        CHECK(s.c_plus == s.c_minus);
    }
    auto h = normalize_kernel(1.5, 0.5);
    CHECK(h.c_gamma == doctest::Approx(0.3727).epsilon(1e-4));
    CHECK(h.c_plus == doctest::Approx(1.5 * h.c_gamma));
    CHECK(h.c_minus == doctest::Approx(0.5 * h.c_gamma));
    CHECK_THROWS_AS(normalize_kernel(-1.0, 0.0), ParameterError);
    CHECK_THROWS_AS(normalize_kernel(1.0, 1.5), ParameterError);
}

TEST_CASE("zeta series against an independent implementation") {
    for (double s : {1.05, 1.3, 1.5, 2.0, 2.5, 4.0, 7.0})
        CHECK(zeta(s) == doctest::Approx(boost::math::zeta(s)).epsilon(1e-13));
}

TEST_CASE("c_gamma increases with gamma") {
    double prev = 0.0;
    for (double g = 0.1; g < 6.0; g += 0.1) {
        double c = normalize_kernel(g, 0.0).c_gamma;
        CHECK(c > prev);
        prev = c;
    }
}

TEST_CASE("theta examples") {
    CHECK(theta(100, 1.0) == doctest::Approx(100.0));
    CHECK(theta(10, 3.0) == doctest::Approx(100.0));
    CHECK(theta(100, 2.0) == doctest::Approx(1e4 / std::log(100.0)).epsilon(1e-12));
}

TEST_CASE("exchange_rate examples") {
    const std::array<double, 3> E{1.0, 0.0, -1.0};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (a != b) CHECK(exchange_rate(a, b, 0.0, E) == 1.0);
    CHECK_THROWS_AS(exchange_rate(A, A, 0.1, E), ParameterError);
    CHECK(exchange_rate(A, B, 0.1, E) == doctest::Approx(1.1));
    CHECK(exchange_rate(B, A, 0.1, E) == doctest::Approx(0.9));
    CHECK(exchange_rate(A, C, 0.1, E) == doctest::Approx(1.2));
    for (double k : {0.0, 0.05, 0.2, 0.24}) {
        auto r = RateModel::from_energies(k, E);
        CHECK(r(A, B) + r(B, C) + r(C, A) == doctest::Approx(3.0));
        CHECK(r(B, A) + r(C, B) + r(A, C) == doctest::Approx(3.0));
    }
}

TEST_CASE("pairwise balance holds for arbitrary energies") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        std::array<double, 3> E{2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1};
        auto r = RateModel::from_energies(0.2 * uniform01(rng), E);
        CHECK(std::abs(r.balance_residual()) < 1e-15);
    }
}

TEST_CASE("kernel tables: symmetric and antisymmetric parts") {
    ModelParams p;
    p.set_kernel(1.5, 0.4);
    p.n = 64;
    p.lattice_size = 1024;
    KernelTables t(p);
    for (int z = 1; z <= t.half(); ++z) {
        CHECK(t.p(z) == doctest::Approx(t.s(z) + t.a(z)).epsilon(1e-15));
        CHECK(t.p(-z) == doctest::Approx(t.s(z) - t.a(z)).epsilon(1e-15));
        CHECK(t.s(z) == t.s(-z));
        CHECK(t.a(z) == -t.a(-z));
        CHECK(std::abs(t.a(z)) <= t.s(z));
    }
    const double bound = t.c_gamma * 2 * std::pow(t.half(), -1.5) / 1.5;
    CHECK(t.truncated_mass <= bound * 1.01);
    CHECK(t.truncated_mass > 0.0);
}

TEST_CASE("drift moments") {
    ModelParams p;
    p.set_kernel(1.0, 0.0);
    p.n = 64;
    p.lattice_size = 2048;
    KernelTables sym(p);
    auto m = drift_moments(sym, 64, 1.0);
    CHECK(m.m_a == 0.0);
    CHECK(m.m_n_gamma == 0.0);

    p.set_kernel(1.5, 0.5);
    KernelTables t(p);
    const double d = p.c_plus - p.c_minus;
    CHECK(t.m_a == doctest::Approx(d * 2.612375).epsilon(1e-6));

    p.set_kernel(0.5, 0.5);
    KernelTables low(p);
    CHECK(drift_moments(low, 64, 0.5).m_n_gamma == 0.0);
}

TEST_CASE("hypothesis classification") {
    ModelParams p;
    p.set_kernel(1.0, 0.5);
    p.kn = {0.1, 0.0};
    auto h = classify_hypothesis(p);
    CHECK(h.tag == Hypothesis::Hyp1);
    CHECK(h.k_star == 0.0);

    p.set_kernel(1.5, 0.0);
    CHECK(classify_hypothesis(p).tag == Hypothesis::Hyp1);

    p.set_kernel(1.5, 0.5);
    p.kn = {0.2, 0.0};
    h = classify_hypothesis(p);
    CHECK(h.tag == Hypothesis::Hyp2);
    CHECK(h.k_star == doctest::Approx(0.2));
}

TEST_CASE("model validation names the violated constraint") {
    ModelParams p;
    p.set_kernel(1.0, 0.5);
    p.kn = {0.3, 0.0};
    try {
        p.validate();
        FAIL("expected rate positivity error");
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).find("rate positivity") != std::string::npos);
    }
    p.kn = {0.1, 0.0};
    p.energies = {1.0, 0.0, 1.0};
    try {
        p.validate();
        FAIL("expected Delta error");
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).find("Delta") != std::string::npos);
    }
    p.energies = {1.0, 0.0, -1.0};
    p.n = 64;
    p.lattice_size = 256;
    CHECK_THROWS_AS(p.validate_for_ensemble(), ParameterError);
    p.lattice_size = 4097;
    CHECK_THROWS_AS(p.validate_for_ensemble(), ParameterError);
    p.lattice_size = 4096;
    CHECK_NOTHROW(p.validate_for_ensemble());
}
