#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "abcsim/rng.hpp"

namespace abc {

enum Species : std::uint8_t { A = 0, B = 1, C = 2 };

inline char species_char(int s) { return "ABC"[s]; }

// K_n = kappa0 * n^{-beta}
struct KnRule {
    double kappa0 = 0.0;
    double beta = 0.0;

    double at(int n) const;
    // lim_{n→∞} K_n (0, kappa0 or +inf)
    double limit() const;
};

struct ModelParams {
    double gamma = 1.0;
    double c_plus = 0.0;
    double c_minus = 0.0;
    std::array<double, 3> energies{1.0, 0.0, -1.0};
    std::array<double, 3> densities{1.0 / 3, 1.0 / 3, 1.0 / 3};
    double d1 = 1.0;
    KnRule kn;
    int n = 64;
    int lattice_size = 4096;

    // Sets gamma and c^± = c_γ(1 ± asymmetry).
    void set_kernel(double gamma_, double asymmetry);
    double asymmetry() const;
    double k_n() const { return kn.at(n); }

    // Model invariants (kernel normalization, rate positivity, Δ > 0).
    void validate() const;
    // validate() plus the torus requirements used for ensembles:
    // L even, L ≥ 8n, truncated kernel mass < 1e-3.
    void validate_for_ensemble() const;
};

// Σ_{z≥N} z^{-s}, s > 1, via Euler–Maclaurin on the tail.
double power_sum_tail(double s, std::int64_t N);
// ζ(s) = Σ_{z≥1} z^{-s}
double zeta(double s);

struct KernelNormalization {
    double c_plus;
    double c_minus;
    double c_gamma;
};

KernelNormalization normalize_kernel(double gamma, double asymmetry);

double theta(int n, double gamma);

// 1 + K_n (E_α − E_β); throws when not strictly positive.
double exchange_rate(int alpha, int beta, double k_n, const std::array<double, 3>& energies);

struct RateModel {
    double k_n = 0.0;
    double rates[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double r_max = 1.0;

    static RateModel from_params(const ModelParams& p);
    static RateModel from_energies(double k_n, const std::array<double, 3>& energies);
    // Arbitrary off-diagonal table (rate[α][β] for η(x)=α, η(y)=β); no balance check.
    static RateModel custom(const double table[3][3]);

    double operator()(int alpha, int beta) const { return rates[alpha][beta]; }
    double balance_residual() const;
};

// Precomputed kernel on the torus: displacements 1 ≤ |z| ≤ L/2.
class KernelTables {
  public:
    explicit KernelTables(const ModelParams& params);

    int lattice_size() const { return L_; }
    int half() const { return half_; }
    double gamma() const { return gamma_; }

    double p(int z) const { return z > 0 ? p_pos_[z] : p_neg_[-z]; }
    double s(int z) const;
    double a(int z) const;

    double c_gamma = 0.0;
    double c_hat_gamma = 0.0; // 0 for γ < 2
    double m_a = 0.0;         // NaN when the untruncated series diverges (γ ≤ 1, c⁺≠c⁻)
    double m_n_gamma = 0.0;
    double theta_n = 0.0;
    double truncated_mass = 0.0;

    // Cumulative table over the signed displacements ordered
    // −half..−1, 1..half, renormalized by (1 − truncated_mass).
    const std::vector<double>& cdf() const { return cdf_; }
    const std::vector<int>& displacements() const { return disp_; }

    int sample_displacement(Rng& rng) const;

  private:
    int L_ = 0;
    int half_ = 0;
    double gamma_ = 0.0;
    std::vector<double> p_pos_, p_neg_;
    std::vector<int> disp_;
    std::vector<double> cdf_;
    // alias table
    std::vector<double> alias_prob_;
    std::vector<std::uint32_t> alias_idx_;
};

struct DriftMoments {
    double m_a;
    double m_n_gamma;
};

// m_a from the untruncated series; m_n^γ per the γ-regime.
DriftMoments drift_moments(const KernelTables& tables, int n, double gamma);

enum class Hypothesis { Hyp1, Hyp2, Neither };

struct HypothesisClass {
    Hypothesis tag = Hypothesis::Neither;
    double k_star = 0.0; // may be +inf
};

HypothesisClass classify_hypothesis(const ModelParams& params);
std::string to_string(Hypothesis h);

} // namespace abc
