#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "abcsim/fft.hpp"
#include "abcsim/kernel.hpp"
#include "abcsim/lattice.hpp"
#include "abcsim/operators.hpp"

namespace abc {

enum class Sign { plus = 0, minus = 1 };

inline int index_of(Sign s) { return static_cast<int>(s); }
inline Sign sign_at(int i) { return i == 0 ? Sign::plus : Sign::minus; }
const char* to_string(Sign s);

// Constants of one normal mode.
struct ModeConstants {
    double lambda = 0.0;
    double d1 = 1.0;
    double d2 = 0.0;
    double d3 = 0.0;
    double v = 0.0;
    double kappa = 0.0;
    double d4 = 0.0;
    double d5 = 0.0;
    double d6 = 0.0;
};

struct NormalModeConstants {
    double delta = 0.0;
    double d1 = 1.0;
    double lambda_plus = 0.0, lambda_minus = 0.0;
    double d2_plus = 0.0, d2_minus = 0.0;
    double d3_plus = 0.0, d3_minus = 0.0;
    double v_plus = 0.0, v_minus = 0.0;
    double kappa_plus = 0.0, kappa_minus = 0.0;
    double d4 = 0.0;
    double d5_plus = 0.0, d5_minus = 0.0;
    double d6_plus = 0.0, d6_minus = 0.0;

    ModeConstants mode(Sign s) const;
    // 2D1² + 2D2⁺D2⁻ − D1(D2⁺ + D2⁻)
    double cross_identity() const;
};

// v uses K_n and m_n^γ at params.n; κ uses K* and m_a.
NormalModeConstants normal_mode_constants(const ModelParams& params, const KernelTables& tables);
NormalModeConstants normal_mode_constants(const ModelParams& params);

// D1 ξ̄^A + D2 ξ̄^B for a species.
inline double mode_value(int species, double d1, double d2, const std::array<double, 3>& rho) {
    return d1 * ((species == A ? 1.0 : 0.0) - rho[A]) + d2 * ((species == B ? 1.0 : 0.0) - rho[B]);
}

// Throws ParameterError unless the support of H fits in the torus (2·R·n < L).
void check_support_fits(const TestFunction& H, int n, int L);

// h[x] = H((x̃ − shift)/n) at each torus site, x̃ ≡ x (mod L) the representative
// in [c·n + shift − L/2, c·n + shift + L/2).
std::vector<double> periodized_profile(const TestFunction& H, int n, int L, double shift);
// Same with ∇H; `floored` evaluates at ⌊x̃ − shift⌋/n.
std::vector<double> periodized_gradient(const TestFunction& H, int n, int L, double shift, bool floored);

// Direct evaluations (reference implementations; O(L) or O(L·r_cut)).

// (1/√n) Σ_x H((x − shift)/n) ξ̄_x^α
double fluctuation_field(const Configuration& c, const TestFunction& H, int n, int alpha, double shift,
                         const std::array<double, 3>& rho);
// D1 [Y^A(T_{tv}H) + (D2/D1) Y^B(T_{tv}H)]
double normal_field(const Configuration& c, const TestFunction& H, int n, Sign s, double t,
                    const NormalModeConstants& k, const std::array<double, 3>& rho);

// Pair order in NonlinearIncrement::pair and related arrays.
enum PairIndex { AA = 0, BB = 1, AB = 2, BA = 3 };
constexpr int kPairAlpha[4] = {A, B, A, B};
constexpr int kPairBeta[4] = {A, B, B, A};

struct NonlinearIncrement {
    std::array<double, 4> pair{0, 0, 0, 0};
    double combined = 0.0; // 4[D4 AA + D5 BB − D6 AB − D6 BA]
};

inline double combine_pairs(const std::array<double, 4>& pair, const ModeConstants& m) {
    return 4.0 * (m.d4 * pair[AA] + m.d5 * pair[BB] - m.d6 * pair[AB] - m.d6 * pair[BA]);
}

// (Θ K_n/√n) Σ_x Σ_{d=1}^{r_cut} [h(x+d) − h(x)] a(d) ξ̄_x^α ξ̄_{x+d}^β with h the profile at time t.
NonlinearIncrement nonlinear_term_increment(const Configuration& c, const TestFunction& H, int n, double t, Sign s,
                                            const NormalModeConstants& k, const KernelTables& tables, double k_n,
                                            const std::array<double, 3>& rho, int r_cut);

// Weights of the linear drift: 2Θ Σ_r s(r)[h(x+r) − h(x)] − (2λK_n/3){Θ Σ_r a(r)[h(x+r) − h(x)] − (m_n/n) ∇H}.
std::vector<double> drift_weights(const TestFunction& H, int n, double t, const ModeConstants& m,
                                  const KernelTables& tables, double k_n);
// (1/√n) Σ_x F(x) [D1 ξ̄_x^A + D2 ξ̄_x^B]
double integral_term_increment(const Configuration& c, const TestFunction& H, int n, double t, Sign s,
                               const NormalModeConstants& k, const KernelTables& tables, double k_n,
                               const std::array<double, 3>& rho);

// (Θ/n) Σ_x Σ_{0<|z|≤r_cut} p(z) r_{x,x+z} [h(x+z) − h(x)]² (f_{x+z} − f_x)²
double qv_increment(const Configuration& c, const TestFunction& H, int n, double t, Sign s,
                    const NormalModeConstants& k, const KernelTables& tables, const RateModel& rates,
                    const std::array<double, 3>& rho, int r_cut);

// ν_ρ mean of qv_increment with r_cut = L/2 (pair expectation times the stencil sum).
double qv_increment_mean(const TestFunction& H, int n, double t, const ModeConstants& m, const KernelTables& tables,
                         const RateModel& rates, const std::array<double, 3>& rho);

// Block length ⌊εn⌋; throws when below 2.
int block_length(double eps, int n);

// Σ_x ∇H((x − tv)/n) F←(x) F→(x), F← and F→ the left/right block means of D1 ξ̄^A + D2 ξ̄^B.
double energy_integrand(const Configuration& c, const TestFunction& H, int n, Sign s, double eps, double t,
                        const NormalModeConstants& k, const std::array<double, 3>& rho);
// K* m_a Σ_x ∇H(⌊x − tv⌋/n) Ψ^{αβ}_{x,εn}
double block_substitute_integrand(const Configuration& c, const TestFunction& H, int n, Sign s, double eps, double t,
                                  int alpha, int beta, const NormalModeConstants& k, double k_star, double m_a,
                                  const std::array<double, 3>& rho);

// Time snapshot of a trajectory.
struct Snapshot {
    double t = 0.0;
    Configuration config;
};

// ∫_s^t of energy_integrand by trapezoid over the snapshots inside [s, t].
double energy_field(const std::vector<Snapshot>& trajectory, const TestFunction& H, int n, Sign s, double eps,
                    double t0, double t1, const NormalModeConstants& k, const std::array<double, 3>& rho);

// Integrand values of one mode at one sample time.
struct ModeSample {
    double z = 0.0;
    double b = 0.0;
    std::array<double, 4> b_pair{0, 0, 0, 0};
    double i = 0.0;
    double qv = 0.0;
};

struct FieldSeries {
    std::uint64_t trajectory_id = 0;
    std::vector<double> t;
    // indexed by sign, then sample
    std::array<std::vector<double>, 2> z, b, i, m, qv;
    std::array<std::array<std::vector<double>, 4>, 2> b_pair;
    std::vector<std::string> warnings;

    std::size_t size() const { return t.size(); }
};

// Trapezoid integration of the b, i and qv integrands on the sample grid; m = z − z(0) − b − i.
// `velocities` are v^± (used only for the grid-resolution warning).
FieldSeries assemble_series(std::uint64_t trajectory_id, const std::vector<double>& times,
                            const std::vector<std::array<ModeSample, 2>>& samples, double dt, int n,
                            const std::array<double, 2>& velocities);

// Time-integrated block observables of one trajectory over [0, T].
struct BlockSummary {
    std::vector<double> eps;
    std::vector<std::array<double, 2>> energy;                     // [eps][sign]
    std::vector<std::array<double, 2>> substitute;                 // combined, [eps][sign]
    std::vector<std::array<std::array<double, 4>, 2>> substitute_pair; // [eps][sign][pair]
};

struct FieldOptions {
    double horizon = 1.0;
    double dt = 0.0; // 0: min(1e-2, 0.1·n/max(1, |v|))
    std::vector<double> block_eps;
    int block_refine = 5; // block observables are sampled at dt / block_refine
};

double default_time_step(int n, const NormalModeConstants& k);

// Precomputed config-independent tables for all sample times; evaluates every
// observable of a configuration in O(L log L) via FFT correlations.
class FieldEngine {
  public:
    FieldEngine(const ModelParams& params, const TestFunction& H, const FieldOptions& options);
    ~FieldEngine();
    FieldEngine(const FieldEngine&) = delete;
    FieldEngine& operator=(const FieldEngine&) = delete;

    // Per-thread scratch (FFT plans and buffers).
    struct Workspace;
    struct WorkspaceDeleter {
        void operator()(Workspace* w) const;
    };
    using WorkspacePtr = std::unique_ptr<Workspace, WorkspaceDeleter>;
    WorkspacePtr make_workspace() const;

    const ModelParams& params() const { return params_; }
    const KernelTables& tables() const { return tables_; }
    const RateModel& rates() const { return rates_; }
    const NormalModeConstants& constants() const { return constants_; }
    const TestFunction& test_function() const { return H_; }
    double dt() const { return dt_; }
    double k_star() const { return k_star_; }
    const std::vector<double>& sample_times() const { return times_; }
    const std::vector<double>& block_times() const { return block_times_; }
    const std::vector<double>& block_eps() const { return options_.block_eps; }

    std::array<ModeSample, 2> evaluate(const Configuration& c, std::size_t time_index, Workspace& ws) const;
    // Per eps: energy integrand [sign], substitute pairs [sign][pair].
    void evaluate_blocks(const Configuration& c, std::size_t block_index, Workspace& ws,
                         std::vector<std::array<double, 2>>& energy,
                         std::vector<std::array<std::array<double, 4>, 2>>& substitute_pair) const;

  private:
    struct Frame {
        std::array<std::vector<double>, 2> h, drift, p_h;
    };
    struct BlockFrame {
        std::array<long, 2> start{0, 0};
        std::array<std::vector<double>, 2> grad, grad_floor;
    };

    ModelParams params_;
    TestFunction H_;
    FieldOptions options_;
    KernelTables tables_;
    RateModel rates_;
    NormalModeConstants constants_;
    double k_n_ = 0.0;
    double k_star_ = 0.0;
    double dt_ = 0.0;
    int L_ = 0;
    std::vector<double> times_, block_times_;
    std::vector<Frame> frames_;
    std::vector<BlockFrame> block_frames_;
    std::vector<int> block_lengths_;
    // correlation spectra
    std::vector<cplx> spec_p_, spec_prev_, spec_aplus_, spec_aminus_;
    double p_total_ = 0.0;
    // w(α, β) = r_{αβ} (g_β − g_α)² per sign
    std::array<std::array<std::array<double, 3>, 3>, 2> w_{};
};

} // namespace abc
