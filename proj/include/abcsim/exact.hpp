#pragma once

#include <array>
#include <vector>

#include "abcsim/kernel.hpp"
#include "abcsim/lattice.hpp"

namespace abc {

// Small dense row-major matrix.
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
};

constexpr int kMaxExactSites = 7;

// Q(η, η^{x,y}) = Θ(n) p(y−x) r_{x,y}(η) over all 3^L states (L = tables' lattice size ≤ 7),
// torus displacements 1 ≤ |y−x| ≤ L/2. State index: Configuration::state_index().
DenseMatrix exact_generator(const KernelTables& tables, const RateModel& rates);

std::vector<double> product_measure(const std::array<double, 3>& rho, int L);

// (Q f)(η) = Σ_η' Q(η,η') f(η')
std::vector<double> apply_generator(const DenseMatrix& Q, const std::vector<double>& f);

// ‖πᵀQ‖_∞
double stationarity_residual(const DenseMatrix& Q, const std::vector<double>& pi);

// Builds Q for `params` on a torus of l_small sites and returns ‖ν_ρᵀQ‖_∞.
// rates_override replaces the model rates (used for negative controls).
double verify_stationarity(const ModelParams& params, int l_small, const RateModel* rates_override = nullptr);

// p0 e^{tQ} by uniformization (stable for generators: all terms nonnegative).
std::vector<double> transient_distribution(const DenseMatrix& Q, const std::vector<double>& p0, double t);

// Closed forms of the un-sped operator (Σ p r [f(η^{xy}) − f(η)], no Θ factor).
// alpha ∈ {A, B}: value of (L ξ_z^alpha)(η).
double generator_on_indicator(const Configuration& c, int z, int alpha, const KernelTables& t, const RateModel& r);
// mult ∈ {A, B}, alpha ∈ {A, B}: value of ξ_z^mult(η) · (L ξ_z^alpha)(η).
double indicator_times_generator(const Configuration& c, int z, int mult, int alpha, const KernelTables& t,
                                 const RateModel& r);

// E_ν[(f_w − f_z)² r_{z,w}] for f = d1 ξ̄^A + d2 ξ̄^B, summed over the 9 joint species states of (z, w).
double pair_expectation(const std::array<double, 3>& rho, double d1, double d2, const RateModel& r);

} // namespace abc
