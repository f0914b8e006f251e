#include "abcsim/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "abcsim/errors.hpp"

namespace abc {

namespace {

constexpr std::int64_t kEulerMaclaurinStart = 64;

// Tail Σ_{z≥M} z^{-s} by Euler–Maclaurin through the B6 term.
double em_tail(double s, double M) {
    double t = std::pow(M, 1.0 - s) / (s - 1.0);
    t += 0.5 * std::pow(M, -s);
    t += s * std::pow(M, -s - 1.0) / 12.0;
    t -= s * (s + 1.0) * (s + 2.0) * std::pow(M, -s - 3.0) / 720.0;
    t += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * std::pow(M, -s - 5.0) / 30240.0;
    return t;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(10);
    os << x;
    return os.str();
}

} // namespace

double KnRule::at(int n) const {
    if (kappa0 == 0.0) return 0.0;
    return kappa0 * std::pow(static_cast<double>(n), -beta);
}

double KnRule::limit() const {
    if (kappa0 == 0.0) return 0.0;
    if (beta > 0) return 0.0;
    if (beta == 0) return kappa0;
    return std::numeric_limits<double>::infinity();
}

double power_sum_tail(double s, std::int64_t N) {
    if (!(s > 1.0)) throw ParameterError("power_sum_tail: exponent must exceed 1 (got " + fmt(s) + ")");
    if (N < 1) N = 1;
    double head = 0.0;
    std::int64_t z = N;
    // Sum small terms from the largest index down for accuracy.
    if (z < kEulerMaclaurinStart) {
        for (std::int64_t k = kEulerMaclaurinStart - 1; k >= z; --k) head += std::pow(static_cast<double>(k), -s);
        z = kEulerMaclaurinStart;
    }
    return em_tail(s, static_cast<double>(z)) + head;
}

double zeta(double s) { return power_sum_tail(s, 1); }

KernelNormalization normalize_kernel(double gamma, double asymmetry) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw ParameterError("gamma: must be a positive finite number (got " + fmt(gamma) + ")");
    if (!(asymmetry >= -1.0 && asymmetry <= 1.0))
        throw ParameterError("asymmetry: must lie in [-1, 1] (got " + fmt(asymmetry) + ")");
    double cg = 0.5 / zeta(1.0 + gamma);
    return {cg * (1.0 + asymmetry), cg * (1.0 - asymmetry), cg};
}

double theta(int n, double gamma) {
    if (gamma == 2.0) {
        if (n < 2) throw ParameterError("theta: n must be at least 2 when gamma = 2 (log degeneracy)");
        double dn = n;
        return dn * dn / std::log(dn);
    }
    if (n < 1) throw ParameterError("theta: n must be positive");
    return std::pow(static_cast<double>(n), std::min(gamma, 2.0));
}

double exchange_rate(int alpha, int beta, double k_n, const std::array<double, 3>& energies) {
    if (alpha == beta) throw ParameterError("exchange_rate: species must differ");
    double r = 1.0 + k_n * (energies[alpha] - energies[beta]);
    if (!(r > 0.0))
        throw ParameterError("rate positivity: r_" + std::string(1, species_char(alpha)) + species_char(beta) + " = " +
                             fmt(r) + " is not positive");
    return r;
}

RateModel RateModel::from_energies(double k_n, const std::array<double, 3>& energies) {
    RateModel m;
    m.k_n = k_n;
    m.r_max = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            if (a == b) continue;
            m.rates[a][b] = exchange_rate(a, b, k_n, energies);
            m.r_max = std::max(m.r_max, m.rates[a][b]);
        }
    return m;
}

RateModel RateModel::from_params(const ModelParams& p) { return from_energies(p.k_n(), p.energies); }

RateModel RateModel::custom(const double table[3][3]) {
    RateModel m;
    m.k_n = std::numeric_limits<double>::quiet_NaN();
    m.r_max = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            m.rates[a][b] = a == b ? 0.0 : table[a][b];
            if (a != b && !(table[a][b] > 0.0)) throw ParameterError("custom rates must be positive");
            if (a != b) m.r_max = std::max(m.r_max, table[a][b]);
        }
    return m;
}

double RateModel::balance_residual() const {
    return (rates[A][B] + rates[B][C] + rates[C][A]) - (rates[B][A] + rates[C][B] + rates[A][C]);
}

void ModelParams::set_kernel(double gamma_, double asym) {
    auto k = normalize_kernel(gamma_, asym);
    gamma = gamma_;
    c_plus = k.c_plus;
    c_minus = k.c_minus;
}

double ModelParams::asymmetry() const {
    double s = c_plus + c_minus;
    return s > 0 ? (c_plus - c_minus) / s : 0.0;
}

void ModelParams::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma: must be positive (got " + fmt(gamma) + ")");
    if (!(c_plus >= 0.0) || !(c_minus >= 0.0)) throw ParameterError("c_plus/c_minus: must be nonnegative");
    double cg = 0.5 / zeta(1.0 + gamma);
    if (std::abs(c_plus + c_minus - 2.0 * cg) > 1e-10 * cg)
        throw ParameterError("c_plus + c_minus: must equal 2*c_gamma = " + fmt(2 * cg) + " (kernel normalization)");
    double dsum = 0.0;
    for (int a = 0; a < 3; ++a) {
        if (!(densities[a] >= 0.0 && densities[a] <= 1.0)) throw ParameterError("densities: entries must lie in [0,1]");
        dsum += densities[a];
    }
    if (std::abs(dsum - 1.0) > 1e-12) throw ParameterError("densities: must sum to 1 (got " + fmt(dsum) + ")");
    if (d1 == 0.0 || !std::isfinite(d1)) throw ParameterError("d1: must be nonzero");
    if (!(kn.kappa0 >= 0.0)) throw ParameterError("kn.kappa0: must be nonnegative");
    if (n < 1 || (gamma == 2.0 && n < 2)) throw ParameterError("n: must be positive (at least 2 when gamma = 2)");
    if (lattice_size < 2) throw ParameterError("lattice_size: must be at least 2");
    double de = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) de = std::max(de, std::abs(energies[a] - energies[b]));
    double klim = kn.limit();
    if (!(2.0 * klim * de < 1.0))
        throw ParameterError("kn: rate positivity requires 2*K*max|E_a - E_b| < 1 (got " + fmt(2.0 * klim * de) + ")");
    if (!(2.0 * k_n() * de < 1.0))
        throw ParameterError("kn: rate positivity requires 2*K_n*max|E_a - E_b| < 1 at n = " + std::to_string(n));
    const auto& E = energies;
    if (E[A] == E[C]) throw ParameterError("energies: E_A must differ from E_C (Delta > 0 restriction)");
    double delta = (E[A] - E[B]) * (E[A] - E[B]) - (E[A] - E[C]) * (E[C] - E[B]);
    if (!(delta > 0.0)) throw ParameterError("energies: Delta = " + fmt(delta) + " must be positive");
}

void ModelParams::validate_for_ensemble() const {
    validate();
    if (lattice_size % 2 != 0) throw ParameterError("lattice_size: must be even");
    if (lattice_size < 8 * n) throw ParameterError("lattice_size: must be at least 8*n (torus wrap margin)");
    double mass = (c_plus + c_minus) * power_sum_tail(1.0 + gamma, lattice_size / 2 + 1);
    if (!(mass < 1e-3))
        throw ParameterError("lattice_size: truncated kernel mass " + fmt(mass) +
                             " must be below 1e-3; increase lattice_size");
}

KernelTables::KernelTables(const ModelParams& params) {
    if (!(params.gamma > 0.0)) throw ParameterError("gamma: must be positive");
    if (params.lattice_size < 2) throw ParameterError("lattice_size: must be at least 2");
    L_ = params.lattice_size;
    half_ = L_ / 2;
    gamma_ = params.gamma;
    const double cp = params.c_plus, cm = params.c_minus;
    p_pos_.assign(half_ + 1, 0.0);
    p_neg_.assign(half_ + 1, 0.0);
    for (int d = 1; d <= half_; ++d) {
        double w = std::pow(static_cast<double>(d), -1.0 - gamma_);
        p_pos_[d] = cp * w;
        p_neg_[d] = cm * w;
    }
    c_gamma = 0.5 / zeta(1.0 + gamma_);
    if (gamma_ == 2.0)
        c_hat_gamma = 2.0 * c_gamma;
    else if (gamma_ > 2.0)
        c_hat_gamma = 2.0 * c_gamma * zeta(gamma_ - 1.0); // limit of Θ(n)𝕃_n^s on smooth H
    truncated_mass = (cp + cm) * power_sum_tail(1.0 + gamma_, half_ + 1);
    theta_n = theta(params.n, gamma_);
    auto dm = drift_moments(*this, params.n, gamma_);
    m_a = dm.m_a;
    m_n_gamma = dm.m_n_gamma;

    disp_.clear();
    std::vector<double> w;
    for (int d = half_; d >= 1; --d) {
        disp_.push_back(-d);
        w.push_back(p_neg_[d]);
    }
    for (int d = 1; d <= half_; ++d) {
        disp_.push_back(d);
        w.push_back(p_pos_[d]);
    }
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0)) throw ParameterError("kernel: no mass on the torus displacements");
    cdf_.resize(w.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        acc += w[i] / total;
        cdf_[i] = acc;
    }
    cdf_.back() = 1.0;

    // Vose alias table.
    const std::size_t K = w.size();
    alias_prob_.assign(K, 0.0);
    alias_idx_.assign(K, 0);
    std::vector<double> scaled(K);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < K; ++i) {
        scaled[i] = w[i] / total * static_cast<double>(K);
        (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
        auto l = small.back();
        small.pop_back();
        auto g = large.back();
        alias_prob_[l] = scaled[l];
        alias_idx_[l] = g;
        scaled[g] = (scaled[g] + scaled[l]) - 1.0;
        if (scaled[g] < 1.0) {
            large.pop_back();
            small.push_back(g);
        }
    }
    for (auto g : large) {
        alias_prob_[g] = 1.0;
        alias_idx_[g] = g;
    }
    for (auto l : small) {
        alias_prob_[l] = 1.0;
        alias_idx_[l] = l;
    }
}

double KernelTables::s(int z) const {
    int d = z > 0 ? z : -z;
    return 0.5 * (p_pos_[d] + p_neg_[d]);
}

double KernelTables::a(int z) const {
    int d = z > 0 ? z : -z;
    double v = 0.5 * (p_pos_[d] - p_neg_[d]);
    return z > 0 ? v : -v;
}

int KernelTables::sample_displacement(Rng& rng) const {
    auto i = uniform_index(rng, alias_prob_.size());
    double u = uniform01(rng);
    return u < alias_prob_[i] ? disp_[i] : disp_[alias_idx_[i]];
}

DriftMoments drift_moments(const KernelTables& t, int n, double gamma) {
    double dc = 2.0 * t.a(1); // c⁺ − c⁻
    double th = theta(n, gamma);
    DriftMoments m{0.0, 0.0};
    if (dc == 0.0) return m;
    if (gamma > 1.0)
        m.m_a = dc * zeta(gamma);
    else
        m.m_a = std::numeric_limits<double>::quiet_NaN();
    if (gamma < 1.0) {
        m.m_n_gamma = 0.0;
    } else if (gamma == 1.0) {
        double h = 0.0;
        for (int r = n; r >= 1; --r) h += 1.0 / r;
        m.m_n_gamma = th * dc * h;
    } else {
        m.m_n_gamma = th * m.m_a;
    }
    return m;
}

HypothesisClass classify_hypothesis(const ModelParams& p) {
    const double inf = std::numeric_limits<double>::infinity();
    HypothesisClass h;
    const bool symmetric = p.c_plus == p.c_minus;
    const double k0 = p.kn.kappa0, beta = p.kn.beta;
    bool gamma2_small = false;
    if (k0 == 0.0) {
        h.k_star = 0.0;
        gamma2_small = true;
    } else if (p.gamma == 2.0) {
        // Θ K_n / n^{3/2} = κ₀ n^{1/2-β} / ln n ; K_n √n (ln n)^{-3/4} = κ₀ n^{1/2-β} (ln n)^{-3/4}
        h.k_star = beta >= 0.5 ? 0.0 : inf;
        gamma2_small = beta >= 0.5;
    } else {
        double e = std::min(p.gamma, 2.0) - beta - 1.5;
        if (std::abs(e) < 1e-12)
            h.k_star = k0;
        else
            h.k_star = e < 0 ? 0.0 : inf;
    }
    if (symmetric || h.k_star == 0.0 || (p.gamma == 2.0 && gamma2_small))
        h.tag = Hypothesis::Hyp1;
    else if (p.gamma != 2.0 && h.k_star > 0.0 && std::isfinite(h.k_star))
        h.tag = Hypothesis::Hyp2;
    else
        h.tag = Hypothesis::Neither;
    return h;
}

std::string to_string(Hypothesis h) {
    switch (h) {
    case Hypothesis::Hyp1: return "Hyp1";
    case Hypothesis::Hyp2: return "Hyp2";
    default: return "Neither";
    }
}

} // namespace abc
