#pragma once

#include <complex>
#include <string>
#include <vector>

#include "abcsim/kernel.hpp"

namespace abc {

enum class Family { gaussian, bump, modulated_gaussian };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

// Smooth test functions with analytic H, ∇H, ΔH.
//   gaussian(c, w):              exp(-(u-c)²/(2w²))
//   bump(c, h):                  exp(1 - 1/(1-s²)), s = (u-c)/h, zero for |s| ≥ 1
//   modulated_gaussian(c, w, k): exp(-(u-c)²/(2w²)) cos(2πk(u-c))
class TestFunction {
  public:
    static TestFunction gaussian(double center, double width);
    static TestFunction bump(double center, double halfwidth);
    static TestFunction modulated_gaussian(double center, double width, double wavenumber);

    double operator()(double u) const;
    double grad(double u) const;
    double lap(double u) const;
    // Higher derivatives from central differences of the analytic ΔH.
    double d3(double u) const;
    double d4(double u) const;
    double d5(double u) const;
    double d6(double u) const;

    Family family() const { return family_; }
    double center() const { return center_; }
    double width() const { return width_; }
    double wavenumber() const { return k_; }
    // |H(u)| < 1e-14 for |u - center| > support_radius()
    double support_radius() const;
    // length scale on which H varies
    double scale() const;

    TestFunction shifted(double delta) const;
    // u ↦ H(u/a) about the origin
    TestFunction dilated(double a) const;

    bool has_fourier() const { return family_ != Family::bump; }
    // Ĥ(ξ) = ∫ H(u) e^{-2πiξu} du
    std::complex<double> fourier(double xi) const;

  private:
    Family family_ = Family::gaussian;
    double center_ = 0.0;
    double width_ = 1.0;
    double k_ = 0.0;
};

// Values at sites x0, ..., x0+size-1, read at macroscopic points x/n.
struct GridFunction {
    int n = 1;
    long x0 = 0;
    std::vector<double> values;

    long size() const { return static_cast<long>(values.size()); }
    double at(long x) const {
        long i = x - x0;
        return (i >= 0 && i < size()) ? values[i] : 0.0;
    }
};

GridFunction sample_grid(const TestFunction& H, int n, long x0, long count);

// (1/n) Σ_x H(x/n)²
double discrete_l2_norm(const TestFunction& H, int n);
double discrete_l2_norm(const GridFunction& g);

enum class LatticeRange {
    torus,    // stencil limited to |r| ≤ L/2, as in the simulated process
    infinite, // stencil on ℤ: the mass beyond L/2 is added analytically (H must vanish there)
};

// Θ(n) 2 Σ_r [H((x+r)/n) − H(x/n)] s(r) at x = x0 .. x0+count-1
GridFunction discrete_sym_op(const TestFunction& H, int n, const KernelTables& t, long x0, long count,
                             LatticeRange range = LatticeRange::torus);
// (2λK_n/3){Θ(n) Σ_r [H((x+r)/n) − H(x/n)] a(r) − (m_n/n) ∇H(x/n)}
GridFunction discrete_asym_op(const TestFunction& H, int n, double lambda, double k_n, const KernelTables& t,
                              long x0, long count);

struct QuadratureInfo {
    double abs_error = 0.0;     // accumulated quadrature error estimate
    double taylor_h = 0.0;      // Taylor cutoff near the singularity
    double taylor_bound = 0.0;  // bound on the dropped Taylor remainder
};

// 𝕃^γ H(u)
double continuum_sym_op(const TestFunction& H, double gamma, double u, QuadratureInfo* info = nullptr);
// L̂_λ^γ G(u) with kernel weights c^±
double continuum_asym_op(const TestFunction& G, double gamma, double lambda, double K, double c_plus, double c_minus,
                         double u, QuadratureInfo* info = nullptr);
// 𝒫^γ H
double seminorm(const TestFunction& H, double gamma);

// ∫_ℝ f(u)² du etc. by adaptive quadrature over the support
double l2_norm_sq(const TestFunction& H);
double grad_l2_norm_sq(const TestFunction& H);

// Multiplier forms on e_κ(u) = e^{iκu}:
//   𝕃^γ e_κ = −C(γ)|κ|^γ e_κ (γ < 2),   L̂ e_κ = i λ Ĉ sgn(κ)|κ|^γ e_κ (γ ∈ (0,1) ∪ (1,2)).
double multiplier_sym_constant(double gamma);
double multiplier_asym_constant(double gamma, double K, double c_plus, double c_minus);
// Same operators through ∫ Ĥ(ξ) m(2πξ) e^{2πiξu} dξ (gaussian families only).
double fourier_sym_op(const TestFunction& H, double gamma, double u);
double fourier_asym_op(const TestFunction& G, double gamma, double lambda, double K, double c_plus, double c_minus,
                       double u);

// Linear drift A = Θ(n)𝕃_n^s − L̂_{n,λ} on the periodic grid of M = tables.lattice_size() sites
// at spacing 1/n; e^{tA} via its exact circulant eigen-decomposition.
class OuReference {
  public:
    OuReference(const KernelTables& tables, int n, double lambda, double k_n, double d3);

    int grid_size() const { return M_; }
    // H on the grid, periodized around its center
    std::vector<double> grid_values(const TestFunction& H) const;
    // D3 (1/n) ⟨e^{tA} H, G⟩
    double covariance(const TestFunction& H, const TestFunction& G, double t) const;
    std::vector<double> apply_exp(const std::vector<double>& h, double t) const;
    // direct stencil sums plus spectral gradient
    std::vector<double> apply_generator(const std::vector<double>& h) const;
    // D3 (1/n) ⟨Σ_{k≤terms} t^k A^k H / k!, G⟩
    double series_covariance(const TestFunction& H, const TestFunction& G, double t, int terms) const;

  private:
    const KernelTables& t_;
    int n_;
    int M_;
    double lambda_, k_n_, d3_;
    std::vector<std::complex<double>> symbol_;
    std::vector<double> spectral_gradient(const std::vector<double>& h) const;
};

double ou_reference_covariance(const TestFunction& H, const TestFunction& G, double t, const ModelParams& params,
                               double lambda, double d3);

struct ConvergenceRow {
    std::string family;
    double gamma = 0.0;
    int n = 0;
    double err_sym = 0.0;
    double err_asym = 0.0;
};

// err(n) = (1/n) Σ_x [discrete − continuum]²(x/n) over a window around the support,
// using the stencil on ℤ. ns must each divide the largest n.
std::vector<ConvergenceRow> operator_convergence(const TestFunction& H, double gamma, const std::vector<int>& ns,
                                                 double asymmetry, double lambda, double K);

void write_convergence_csv(const std::string& path, const std::vector<ConvergenceRow>& rows,
                           const std::string& manifest_hash = "");

} // namespace abc
