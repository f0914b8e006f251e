#include <cmath>

#include "abcsim/exact.hpp"
#include "doctest.h"

using namespace abc;

namespace {
ModelParams small(double gamma, double asym, double k, int L) {
    ModelParams p;
    p.set_kernel(gamma, asym);
    p.kn = {k, 0.0};
    p.n = L;
    p.lattice_size = L;
    return p;
}
} // namespace

TEST_CASE("generator rows sum to zero") {
    auto p = small(1.5, 0.5, 0.2, 5);
    KernelTables t(p);
    auto Q = exact_generator(t, RateModel::from_params(p));
    CHECK(Q.rows == 243);
    for (int i = 0; i < Q.rows; ++i) {
        double s = 0;
        for (int j = 0; j < Q.cols; ++j) {
            s += Q(i, j);
            if (i != j) CHECK(Q(i, j) >= 0.0);
        }
        CHECK(std::abs(s) < 1e-12 * t.theta_n);
    }
    auto ones = apply_generator(Q, std::vector<double>(Q.rows, 1.0));
    for (double v : ones) CHECK(std::abs(v) < 1e-12 * t.theta_n);
}

TEST_CASE("product measure is stationary") {
    for (double g : {0.5, 1.0, 1.5, 2.0, 3.0})
        for (double k : {0.0, 0.1, 0.2})
            for (double asym : {0.0, 0.5}) CHECK(verify_stationarity(small(g, asym, k, 5), 5) < 1e-10);
    CHECK(verify_stationarity(small(1.5, 0.5, 0.2, 6), 6) < 1e-10);
}

TEST_CASE("degenerate densities: point mass is stationary") {
    auto p = small(1.0, 0.5, 0.1, 5);
    p.densities = {1.0, 0.0, 0.0};
    KernelTables t(p);
    auto Q = exact_generator(t, RateModel::from_params(p));
    auto pi = product_measure(p.densities, 5);
    CHECK(pi[0] == 1.0);
    CHECK(stationarity_residual(Q, pi) == 0.0);
}

TEST_CASE("rates violating pairwise balance break stationarity") {
    auto p = small(1.0, 0.5, 0.0, 5);
    double table[3][3] = {{0, 2, 1}, {1, 0, 1}, {1, 1, 0}};
    auto bad = RateModel::custom(table);
    CHECK(std::abs(bad.balance_residual()) > 0.5);
    CHECK(verify_stationarity(p, 5, &bad) > 1e-3);
}

TEST_CASE("transient distribution") {
    auto p = small(1.5, 0.5, 0.2, 4);
    KernelTables t(p);
    auto Q = exact_generator(t, RateModel::from_params(p));
    std::vector<double> p0(Q.rows, 0.0);
    p0[Configuration::from_ascii("ABCA").state_index()] = 1.0;

    auto same = transient_distribution(Q, p0, 0.0);
    CHECK(same == p0);

    // small-t Taylor series p0 (I + tQ + t²Q²/2 + t³Q³/6)
    const double h = 1e-3 / t.theta_n;
    auto left = [&](const std::vector<double>& v) {
        std::vector<double> out(Q.cols, 0.0);
        for (int i = 0; i < Q.rows; ++i)
            for (int j = 0; j < Q.cols; ++j) out[j] += v[i] * Q(i, j);
        return out;
    };
    auto q1 = left(p0), q2 = left(q1), q3 = left(q2);
    auto pt = transient_distribution(Q, p0, h);
    double total = 0;
    for (int j = 0; j < Q.cols; ++j) {
        double series = p0[j] + h * q1[j] + h * h / 2 * q2[j] + h * h * h / 6 * q3[j];
        CHECK(std::abs(pt[j] - series) < 1e-10);
        CHECK(pt[j] >= 0.0);
        total += pt[j];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-13));

    auto pi = product_measure(p.densities, 4);
    auto kept = transient_distribution(Q, pi, 0.7);
    for (int j = 0; j < Q.cols; ++j) CHECK(std::abs(kept[j] - pi[j]) < 1e-12);
}

TEST_CASE("closed-form generator action matches the matrix") {
    auto p = small(1.5, 0.5, 0.2, 6);
    KernelTables t(p);
    auto r = RateModel::from_params(p);
    auto Q = exact_generator(t, r);
    const int L = 6;
    const std::uint64_t S = Q.rows;
    for (int alpha : {A, B})
        for (int z : {0, 3}) {
            std::vector<double> f(S);
            for (std::uint64_t i = 0; i < S; ++i) f[i] = Configuration::from_state_index(i, L)[z] == alpha;
            auto qf = apply_generator(Q, f);
            for (std::uint64_t i = 0; i < S; i += 7) {
                auto c = Configuration::from_state_index(i, L);
                CHECK(qf[i] / t.theta_n == doctest::Approx(generator_on_indicator(c, z, alpha, t, r)).epsilon(1e-12));
            }
        }
}

TEST_CASE("pair expectation: symmetric rates") {
    const std::array<double, 3> rho{1.0 / 3, 1.0 / 3, 1.0 / 3};
    auto flat = RateModel::from_energies(0.0, {1.0, 0.0, -1.0});
    CHECK(pair_expectation(rho, 1.0, 0.0, flat) == doctest::Approx(4.0 / 9));
    CHECK(pair_expectation(rho, 0.0, 0.0, flat) == 0.0);
}
