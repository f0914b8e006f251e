#include <cmath>
#include <filesystem>

#include "abcsim/analysis.hpp"
#include "abcsim/errors.hpp"
#include "doctest.h"

using namespace abc;

namespace {
const std::array<double, 3> kThird{1.0 / 3, 1.0 / 3, 1.0 / 3};

ExperimentPlan small_plan(std::size_t trajectories) {
    ExperimentPlan plan;
    plan.params.set_kernel(1.5, 0.5);
    plan.params.kn = {0.2, 0.0};
    plan.params.lattice_size = 256;
    plan.ns = {8};
    plan.lattice_factor = 32;
    plan.trajectories = trajectories;
    plan.fields.horizon = 0.1;
    plan.fields.block_eps = {0.25};
    plan.fields.block_refine = 2;
    plan.seed = 17;
    return plan;
}

std::vector<double> static_squares(int N, std::uint64_t seed) {
    const int n = 16, L = 512;
    ModelParams p;
    p.set_kernel(1.0, 0.0);
    p.n = n;
    p.lattice_size = L;
    auto k = normal_mode_constants(p);
    auto H = TestFunction::gaussian(0.0, 1.0);
    Rng rng(seed);
    std::vector<double> out;
    for (int i = 0; i < N; ++i) {
        double z = normal_field(sample_invariant(kThird, L, rng), H, n, Sign::plus, 0.0, k, kThird);
        out.push_back(z * z);
    }
    return out;
}
} // namespace

TEST_CASE("batch means: constant series and argument errors") {
    auto r = batch_mean_estimate(std::vector<double>(100, 2.5), 10);
    CHECK(r.estimate == 2.5);
    CHECK(r.se == 0.0);
    CHECK_THROWS_AS(batch_mean_estimate({1.0, 2.0, 3.0}, 5), ParameterError);
    CHECK_THROWS_AS(batch_mean_estimate({1.0, 2.0, 3.0}, 1), ParameterError);
    auto two = batch_mean_estimate({1.0, 3.0}, 2);
    CHECK(two.se > 0.0);
}

TEST_CASE("batch means: i.i.d. normals") {
    Rng rng(41);
    std::normal_distribution<double> N01;
    int inside = 0;
    const int reruns = 200;
    for (int k = 0; k < reruns; ++k) {
        std::vector<double> v(10000);
        for (auto& x : v) x = N01(rng);
        auto r = iid_estimate(v);
        inside += std::abs(r.estimate) <= 4.0 / 100;
        if (k == 0) CHECK(r.se == doctest::Approx(0.01).epsilon(0.05));
    }
    CHECK(inside >= 0.99 * reruns);
}

TEST_CASE("batch means: AR(1) series") {
    Rng rng(42);
    std::normal_distribution<double> N01;
    const double phi = 0.9;
    const int N = 200000;
    std::vector<double> v(N);
    double x = 0;
    for (int i = 0; i < 1000; ++i) x = phi * x + N01(rng);
    for (auto& y : v) y = x = phi * x + N01(rng);
    auto r = batch_mean_estimate(v, 50);
    const double analytic = 1.0 / (1 - phi) / std::sqrt(double(N));
    CHECK(r.se > analytic / 2);
    CHECK(r.se < analytic * 2);
    // the naive i.i.d. SE underestimates by about √19
    CHECK(iid_estimate(v).se < analytic / 3);
}

TEST_CASE("limit tests") {
    EstimatorReport r;
    r.name = "exact";
    r.estimate = 1.5;
    r.se = 0.1;
    r.set_reference(1.5);
    auto out = test_limit_prediction({r});
    CHECK(out[0].z == 0.0);
    CHECK(out[0].pass);

    EstimatorReport missing;
    missing.name = "no reference";
    missing.estimate = 1.0;
    missing.se = 0.1;
    CHECK_THROWS_AS(test_limit_prediction({missing}), ConfigError);
}

TEST_CASE("static variance: correct constant passes, doubled constant fails") {
    auto v = static_squares(3000, 43);
    const double ref = (1.0 / 3) * discrete_l2_norm(TestFunction::gaussian(0.0, 1.0), 16);
    auto good = iid_estimate(v, "static variance");
    good.set_reference(ref);
    auto bad = iid_estimate(v, "static variance x2");
    bad.set_reference(2 * ref);
    auto out = test_limit_prediction({good, bad});
    CHECK(out[0].pass);
    CHECK_FALSE(out[1].pass);
}

TEST_CASE("standard error shrinks like one over root N") {
    auto a = iid_estimate(static_squares(2000, 44));
    auto b = iid_estimate(static_squares(4000, 45));
    const double ratio = a.se / b.se;
    CHECK(ratio > std::sqrt(2.0) * 0.8);
    CHECK(ratio < std::sqrt(2.0) * 1.2);
    // different seeds agree within the combined interval
    CHECK(std::abs(a.estimate - b.estimate) < 4 * std::hypot(a.se, b.se));
    CHECK(a.estimate != b.estimate);
}

TEST_CASE("power law fits") {
    std::vector<double> xs{1, 2, 4, 8, 16}, ys, zs, ws;
    for (double x : xs) {
        ys.push_back(std::sqrt(x));
        zs.push_back(3 * x * x);
    }
    auto f = fit_power_law(xs, ys);
    CHECK(f.exponent == doctest::Approx(0.5));
    CHECK(f.r_squared == doctest::Approx(1.0));
    auto g = fit_power_law(xs, zs);
    CHECK(g.exponent == doctest::Approx(2.0));
    CHECK(g.intercept == doctest::Approx(std::log(3.0)));

    Rng rng(46);
    std::normal_distribution<double> N01;
    for (int k = 0; k < 20; ++k) {
        ws.clear();
        for (double x : xs) ws.push_back(std::sqrt(x) * (1 + 0.05 * N01(rng)));
        auto h = fit_power_law(xs, ws);
        CHECK(h.exponent >= 0.4);
        CHECK(h.exponent <= 0.6);
    }
    CHECK_THROWS_AS(fit_power_law({1, 2, 3}, {1, -1, 2}), ParameterError);
    CHECK_THROWS_AS(fit_power_law({1, 2}, {1, 2}), ParameterError);
}

TEST_CASE("Bonferroni threshold") {
    CHECK(bonferroni_threshold(1) == 4.0);
    CHECK(bonferroni_threshold(100000) > 4.0);
    CHECK(bonferroni_threshold(100000) == doctest::Approx(5.3267).epsilon(1e-4));
}

TEST_CASE("ensembles are deterministic and thread independent") {
    auto plan = small_plan(6);
    auto a = run_ensemble(plan);
    auto b = run_ensemble(plan);
    plan.threads = 3;
    auto c = run_ensemble(plan);
    REQUIRE(a.size() == 1);
    REQUIRE(a[0].series.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        for (int s = 0; s < 2; ++s) {
            CHECK(a[0].series[i].z[s] == b[0].series[i].z[s]);
            CHECK(a[0].series[i].z[s] == c[0].series[i].z[s]);
            CHECK(a[0].series[i].qv[s] == c[0].series[i].qv[s]);
        }
        CHECK(a[0].blocks[i].energy == c[0].blocks[i].energy);
    }
    plan.seed = 18;
    auto d = run_ensemble(plan);
    CHECK(d[0].series[0].z[0] != a[0].series[0].z[0]);

    auto empty = run_ensemble(small_plan(0));
    REQUIRE(empty.size() == 1);
    CHECK(empty[0].series.empty());
}

TEST_CASE("wrap margin is enforced") {
    auto plan = small_plan(1);
    plan.fields.horizon = 1e4;
    CHECK_THROWS_AS(check_plan(plan), ParameterError);
    CHECK_THROWS_AS(run_ensemble(plan), ParameterError);
}

TEST_CASE("CSV interchange round trip") {
    auto run = run_ensemble(small_plan(3))[0];
    auto dir = std::filesystem::temp_directory_path() / "abcsim_unit_csv";
    std::filesystem::create_directories(dir);
    write_series_csv((dir / "s.csv").string(), run.series, "abc123");
    write_blocks_csv((dir / "b.csv").string(), run.blocks, "abc123");
    std::string h1, h2;
    auto s = read_series_csv((dir / "s.csv").string(), &h1);
    auto b = read_blocks_csv((dir / "b.csv").string(), &h2);
    CHECK(h1 == "abc123");
    CHECK(h2 == "abc123");
    REQUIRE(s.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(s[i].trajectory_id == run.series[i].trajectory_id);
        CHECK(s[i].t == run.series[i].t);
        for (int q = 0; q < 2; ++q) {
            CHECK(s[i].z[q] == run.series[i].z[q]);
            CHECK(s[i].m[q] == run.series[i].m[q]);
            CHECK(s[i].b_pair[q] == run.series[i].b_pair[q]);
        }
        CHECK(b[i].substitute_pair == run.blocks[i].substitute_pair);
    }
    std::filesystem::remove_all(dir);
}
