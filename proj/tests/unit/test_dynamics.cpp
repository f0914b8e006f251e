#include <cmath>
#include <map>

#include "abcsim/dynamics.hpp"
#include "abcsim/exact.hpp"
#include "doctest.h"

using namespace abc;

namespace {
ModelParams small_params(double gamma, double asym, double k, int n, int L) {
    ModelParams p;
    p.set_kernel(gamma, asym);
    p.kn = {k, 0.0};
    p.n = n;
    p.lattice_size = L;
    return p;
}
} // namespace

TEST_CASE("displacement sampling follows the kernel") {
    auto p = small_params(1.5, 0.0, 0.0, 64, 4096);
    KernelTables t(p);
    Rng rng(21);
    const int N = 1000000;
    long one = 0, plus1 = 0, minus1 = 0, big = 0;
    for (int i = 0; i < N; ++i) {
        int z = t.sample_displacement(rng);
        CHECK_FALSE(z == 0);
        one += std::abs(z) == 1;
        plus1 += z == 1;
        minus1 += z == -1;
        big += std::abs(z) > 10;
        if (std::abs(z) > t.half()) FAIL("displacement beyond L/2");
    }
    const double p1 = (t.p(1) + t.p(-1)) / (1 - t.truncated_mass);
    CHECK(std::abs(one / double(N) - p1) < 4 * std::sqrt(p1 * (1 - p1) / N));
    CHECK(std::abs(double(plus1 - minus1)) < 4 * std::sqrt(double(plus1 + minus1)));
    double ptail = 0;
    for (int z = 11; z <= t.half(); ++z) ptail += t.p(z) + t.p(-z);
    ptail /= 1 - t.truncated_mass;
    CHECK(std::abs(big / double(N) - ptail) < 4 * std::sqrt(ptail * (1 - ptail) / N));
}

TEST_CASE("asymmetric kernel biases displacements") {
    auto p = small_params(1.5, 0.5, 0.0, 64, 4096);
    KernelTables t(p);
    Rng rng(22);
    const int N = 400000;
    long pos = 0;
    for (int i = 0; i < N; ++i) pos += t.sample_displacement(rng) > 0;
    CHECK(std::abs(pos / double(N) - 0.75) < 4 * std::sqrt(0.75 * 0.25 / N));
}

TEST_CASE("one proposal reproduces the generator row") {
    // single thinned attempt moves η to η' with probability Q(η,η') / attempt rate
    auto p = small_params(1.0, 0.5, 0.2, 6, 6);
    KernelTables t(p);
    auto r = RateModel::from_params(p);
    Dynamics dyn(t, r);
    auto Q = exact_generator(t, r);
    auto start = Configuration::from_ascii("AABCBC");
    const auto row = start.state_index();
    Rng rng(23);
    const int N = 2000000;
    std::map<std::uint64_t, long> hits;
    for (int i = 0; i < N; ++i) {
        auto c = start;
        dyn.attempt(c, rng);
        ++hits[c.state_index()];
    }
    for (int j = 0; j < Q.cols; ++j) {
        if (j == static_cast<int>(row)) continue;
        const double prob = Q(row, j) / dyn.attempt_rate();
        const double freq = hits.count(j) ? hits[j] / double(N) : 0.0;
        CHECK(std::abs(freq - prob) <= 4 * std::sqrt(prob * (1 - prob) / N) + 1e-12);
    }
}

TEST_CASE("counts are conserved along trajectories") {
    auto p = small_params(1.5, 0.5, 0.2, 16, 256);
    KernelTables t(p);
    Dynamics dyn(t, RateModel::from_params(p));
    Rng rng(24);
    auto c = sample_invariant(p.densities, 256, rng);
    const auto counts = c.counts();
    SimulationClock clock;
    for (int i = 0; i < 1000000; ++i) dyn.step(c, clock, rng);
    CHECK(c.counts() == counts);
    CHECK(c.counts_consistent());
    CHECK(clock.event_count == 1000000u);
}

TEST_CASE("evolve_to: event count and observers") {
    auto p = small_params(1.0, 0.0, 0.1, 8, 64);
    KernelTables t(p);
    Dynamics dyn(t, RateModel::from_params(p));
    Rng rng(25);
    auto c = sample_invariant(p.densities, 64, rng);

    SimulationClock clock;
    auto before = c;
    dyn.evolve_to(c, clock, 0.0, rng);
    CHECK(clock.event_count == 0u);
    CHECK(c == before);

    std::vector<double> seen;
    std::vector<Observer> obs{{{0.0, 0.5, 1.0, 2.0}, [&](std::size_t i, double tt, const Configuration&) {
                                   CHECK(i == seen.size());
                                   seen.push_back(tt);
                               }}};
    const double T = 2.0;
    dyn.evolve_to(c, clock, T, rng, &obs);
    CHECK(seen == std::vector<double>{0.0, 0.5, 1.0, 2.0});
    const double mean = dyn.attempt_rate() * T;
    CHECK(std::abs(clock.event_count - mean) < 5 * std::sqrt(mean));
    CHECK(clock.macro_time == T);
}

TEST_CASE("same seed gives the same trajectory") {
    auto p = small_params(1.5, 0.5, 0.2, 8, 128);
    KernelTables t(p);
    Dynamics dyn(t, RateModel::from_params(p));
    auto run = [&] {
        Rng rng = make_rng(99, 3);
        auto c = sample_invariant(p.densities, 128, rng);
        SimulationClock clock;
        dyn.evolve_to(c, clock, 0.3, rng);
        return c;
    };
    CHECK(run() == run());
}
