#include "abcsim/fields.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "abcsim/errors.hpp"
#include "abcsim/exact.hpp"

namespace abc {

const char* to_string(Sign s) { return s == Sign::plus ? "plus" : "minus"; }

ModeConstants NormalModeConstants::mode(Sign s) const {
    ModeConstants m;
    const bool p = s == Sign::plus;
    m.lambda = p ? lambda_plus : lambda_minus;
    m.d1 = d1;
    m.d2 = p ? d2_plus : d2_minus;
    m.d3 = p ? d3_plus : d3_minus;
    m.v = p ? v_plus : v_minus;
    m.kappa = p ? kappa_plus : kappa_minus;
    m.d4 = d4;
    m.d5 = p ? d5_plus : d5_minus;
    m.d6 = p ? d6_plus : d6_minus;
    return m;
}

double NormalModeConstants::cross_identity() const {
    return 2 * d1 * d1 + 2 * d2_plus * d2_minus - d1 * (d2_plus + d2_minus);
}

NormalModeConstants normal_mode_constants(const ModelParams& p, const KernelTables& t) {
    const auto& E = p.energies;
    const auto& rho = p.densities;
    if (p.d1 == 0.0) throw ParameterError("d1: must be nonzero");
    if (E[A] == E[C]) throw ParameterError("energies: E_A = E_C violates the Δ > 0 restriction");
    NormalModeConstants k;
    k.delta = (E[A] - E[B]) * (E[A] - E[B]) - (E[A] - E[C]) * (E[C] - E[B]);
    if (!(k.delta > 0)) throw ParameterError("energies: Δ > 0 restriction violated");
    const double sq = std::sqrt(k.delta);
    k.d1 = p.d1;
    k.lambda_plus = sq;
    k.lambda_minus = -sq;
    k.d2_plus = p.d1 * (E[A] - E[B] + sq) / (E[A] - E[C]);
    k.d2_minus = p.d1 * (E[A] - E[B] - sq) / (E[A] - E[C]);
    auto chi = [](double u) { return u * (1 - u); };
    auto d3 = [&](double d2) { return p.d1 * p.d1 * chi(rho[A]) + d2 * d2 * chi(rho[B]) - 2 * p.d1 * d2 * rho[A] * rho[B]; };
    k.d3_plus = d3(k.d2_plus);
    k.d3_minus = d3(k.d2_minus);
    const double kn = p.k_n();
    k.v_plus = -(2 * kn / 3) * t.m_n_gamma * k.lambda_plus;
    k.v_minus = -(2 * kn / 3) * t.m_n_gamma * k.lambda_minus;
    const double k_star = classify_hypothesis(p).k_star;
    if (k_star != 0.0 && p.c_plus != p.c_minus) {
        const double s = E[A] - 2 * E[B] + E[C];
        k.kappa_plus = -2 * k_star * t.m_a * (s - sq) * (E[A] - E[C]) / (2 * p.d1 * sq);
        k.kappa_minus = -2 * k_star * t.m_a * (s + sq) * (E[A] - E[C]) / (-2 * p.d1 * sq);
    }
    k.d4 = p.d1 * (E[C] - E[A]);
    k.d5_plus = k.d2_plus * (E[C] - E[B]);
    k.d5_minus = k.d2_minus * (E[C] - E[B]);
    k.d6_plus = (p.d1 * (E[B] - E[C]) + k.d2_plus * (E[A] - E[C])) / 2;
    k.d6_minus = (p.d1 * (E[B] - E[C]) + k.d2_minus * (E[A] - E[C])) / 2;
    return k;
}

NormalModeConstants normal_mode_constants(const ModelParams& params) {
    KernelTables t(params);
    return normal_mode_constants(params, t);
}

void check_support_fits(const TestFunction& H, int n, int L) {
    if (2 * H.support_radius() * n >= L)
        throw ParameterError("test function support (" + std::to_string(2 * H.support_radius() * n) +
                             " sites) does not fit in the torus of " + std::to_string(L) + " sites");
}

namespace {

long window_start(const TestFunction& H, int n, int L, double shift) {
    return static_cast<long>(std::ceil(H.center() * n + shift - L / 2.0));
}

int wrap_site(long x, int L) {
    long r = x % L;
    return static_cast<int>(r < 0 ? r + L : r);
}

std::vector<double> xi_bar(const Configuration& c, int alpha, const std::array<double, 3>& rho) {
    std::vector<double> g(c.size());
    for (int x = 0; x < c.size(); ++x) g[x] = (c[x] == alpha ? 1.0 : 0.0) - rho[alpha];
    return g;
}

std::vector<double> mode_array(const Configuration& c, double d1, double d2, const std::array<double, 3>& rho) {
    std::vector<double> f(c.size());
    for (int x = 0; x < c.size(); ++x) f[x] = mode_value(c[x], d1, d2, rho);
    return f;
}

} // namespace

std::vector<double> periodized_profile(const TestFunction& H, int n, int L, double shift) {
    std::vector<double> h(L);
    const long start = window_start(H, n, L, shift);
    for (long xt = start; xt < start + L; ++xt) h[wrap_site(xt, L)] = H((static_cast<double>(xt) - shift) / n);
    return h;
}

std::vector<double> periodized_gradient(const TestFunction& H, int n, int L, double shift, bool floored) {
    std::vector<double> g(L);
    const long start = window_start(H, n, L, shift);
    for (long xt = start; xt < start + L; ++xt) {
        double arg = static_cast<double>(xt) - shift;
        if (floored) arg = std::floor(arg);
        g[wrap_site(xt, L)] = H.grad(arg / n);
    }
    return g;
}

double fluctuation_field(const Configuration& c, const TestFunction& H, int n, int alpha, double shift,
                         const std::array<double, 3>& rho) {
    check_support_fits(H, n, c.size());
    auto h = periodized_profile(H, n, c.size(), shift);
    double s = 0.0;
    for (int x = 0; x < c.size(); ++x) s += h[x] * ((c[x] == alpha ? 1.0 : 0.0) - rho[alpha]);
    return s / std::sqrt(static_cast<double>(n));
}

double normal_field(const Configuration& c, const TestFunction& H, int n, Sign s, double t,
                    const NormalModeConstants& k, const std::array<double, 3>& rho) {
    const auto m = k.mode(s);
    const double shift = t * m.v;
    return m.d1 * (fluctuation_field(c, H, n, A, shift, rho) + (m.d2 / m.d1) * fluctuation_field(c, H, n, B, shift, rho));
}

NonlinearIncrement nonlinear_term_increment(const Configuration& c, const TestFunction& H, int n, double t, Sign s,
                                            const NormalModeConstants& k, const KernelTables& tables, double k_n,
                                            const std::array<double, 3>& rho, int r_cut) {
    const int L = c.size();
    if (r_cut < 1 || r_cut > tables.half()) throw ParameterError("r_cut: must lie in [1, L/2]");
    const auto m = k.mode(s);
    NonlinearIncrement out;
    if (k_n == 0.0) return out;
    auto h = periodized_profile(H, n, L, t * m.v);
    const auto xa = xi_bar(c, A, rho), xb = xi_bar(c, B, rho);
    const std::vector<double>* xi[2] = {&xa, &xb};
    for (int x = 0; x < L; ++x) {
        for (int d = 1; d <= r_cut; ++d) {
            const int y = wrap_site(static_cast<long>(x) + d, L);
            const double w = (h[y] - h[x]) * tables.a(d);
            if (w == 0.0) continue;
            for (int q = 0; q < 4; ++q) out.pair[q] += w * (*xi[kPairAlpha[q]])[x] * (*xi[kPairBeta[q]])[y];
        }
    }
    const double pre = tables.theta_n * k_n / std::sqrt(static_cast<double>(n));
    for (auto& v : out.pair) v *= pre;
    out.combined = combine_pairs(out.pair, m);
    return out;
}

std::vector<double> drift_weights(const TestFunction& H, int n, double t, const ModeConstants& m,
                                  const KernelTables& tables, double k_n) {
    const int L = tables.lattice_size();
    const int half = tables.half();
    auto h = periodized_profile(H, n, L, t * m.v);
    auto g = periodized_gradient(H, n, L, t * m.v, false);
    const double th = tables.theta_n;
    const double pre = 2 * m.lambda * k_n / 3;
    std::vector<double> F(L);
    for (int x = 0; x < L; ++x) {
        double sym = 0.0, asym = 0.0;
        for (int r = -half; r <= half; ++r) {
            if (r == 0) continue;
            const double dh = h[wrap_site(static_cast<long>(x) + r, L)] - h[x];
            sym += tables.s(r) * dh;
            asym += tables.a(r) * dh;
        }
        F[x] = 2 * th * sym - pre * (th * asym - tables.m_n_gamma / n * g[x]);
    }
    return F;
}

double integral_term_increment(const Configuration& c, const TestFunction& H, int n, double t, Sign s,
                               const NormalModeConstants& k, const KernelTables& tables, double k_n,
                               const std::array<double, 3>& rho) {
    const auto m = k.mode(s);
    auto F = drift_weights(H, n, t, m, tables, k_n);
    double acc = 0.0;
    for (int x = 0; x < c.size(); ++x) acc += F[x] * mode_value(c[x], m.d1, m.d2, rho);
    return acc / std::sqrt(static_cast<double>(n));
}

double qv_increment(const Configuration& c, const TestFunction& H, int n, double t, Sign s,
                    const NormalModeConstants& k, const KernelTables& tables, const RateModel& rates,
                    const std::array<double, 3>& rho, int r_cut) {
    const int L = c.size();
    if (r_cut < 1 || r_cut > tables.half()) throw ParameterError("r_cut: must lie in [1, L/2]");
    const auto m = k.mode(s);
    auto h = periodized_profile(H, n, L, t * m.v);
    auto f = mode_array(c, m.d1, m.d2, rho);
    double acc = 0.0;
    for (int x = 0; x < L; ++x) {
        for (int z = -r_cut; z <= r_cut; ++z) {
            if (z == 0) continue;
            const int y = wrap_site(static_cast<long>(x) + z, L);
            const double dh = h[y] - h[x], df = f[y] - f[x];
            acc += tables.p(z) * rates(c[x], c[y]) * dh * dh * df * df;
        }
    }
    return tables.theta_n / n * acc;
}

double qv_increment_mean(const TestFunction& H, int n, double t, const ModeConstants& m, const KernelTables& tables,
                         const RateModel& rates, const std::array<double, 3>& rho) {
    const int L = tables.lattice_size();
    const int half = tables.half();
    auto h = periodized_profile(H, n, L, t * m.v);
    RealFFT fft(L);
    std::vector<double> w(2 * half + 1, 0.0);
    double ptot = 0.0;
    for (int r = -half; r <= half; ++r) {
        if (r == 0) continue;
        w[r + half] = tables.p(r);
        ptot += tables.p(r);
    }
    auto spec = correlation_spectrum(fft, w, half);
    std::vector<double> ph(L);
    std::vector<cplx> work;
    correlate(fft, spec, h.data(), ph.data(), work);
    double h2 = 0.0, hph = 0.0;
    for (int x = 0; x < L; ++x) {
        h2 += h[x] * h[x];
        hph += h[x] * ph[x];
    }
    const double stencil = 2 * ptot * h2 - 2 * hph;
    return pair_expectation(rho, m.d1, m.d2, rates) * tables.theta_n / n * stencil;
}

int block_length(double eps, int n) {
    if (!(eps > 0 && eps < 0.5)) throw ParameterError("eps: must lie in (0, 1/2)");
    const int l = static_cast<int>(std::floor(eps * n + 1e-9));
    if (l < 2) throw ParameterError("eps: eps·n < 2 leaves the blocks empty");
    return l;
}

double energy_integrand(const Configuration& c, const TestFunction& H, int n, Sign s, double eps, double t,
                        const NormalModeConstants& k, const std::array<double, 3>& rho) {
    const int l = block_length(eps, n);
    const auto m = k.mode(s);
    auto f = mode_array(c, m.d1, m.d2, rho);
    std::vector<double> left, right;
    block_means(f, l, left, right);
    auto g = periodized_gradient(H, n, c.size(), t * m.v, false);
    double acc = 0.0;
    for (int x = 0; x < c.size(); ++x) acc += g[x] * left[x] * right[x];
    return acc;
}

double block_substitute_integrand(const Configuration& c, const TestFunction& H, int n, Sign s, double eps, double t,
                                  int alpha, int beta, const NormalModeConstants& k, double k_star, double m_a,
                                  const std::array<double, 3>& rho) {
    const int l = block_length(eps, n);
    if (k_star == 0.0) return 0.0;
    const auto m = k.mode(s);
    std::vector<double> la, ra, lb, rb;
    block_means(xi_bar(c, alpha, rho), l, la, ra);
    block_means(xi_bar(c, beta, rho), l, lb, rb);
    auto g = periodized_gradient(H, n, c.size(), t * m.v, true);
    double acc = 0.0;
    for (int x = 0; x < c.size(); ++x) acc += g[x] * la[x] * rb[x];
    return k_star * m_a * acc;
}

double energy_field(const std::vector<Snapshot>& traj, const TestFunction& H, int n, Sign s, double eps, double t0,
                    double t1, const NormalModeConstants& k, const std::array<double, 3>& rho) {
    if (t1 < t0) throw ParameterError("energy_field: t1 < t0");
    double acc = 0.0, prev_t = 0.0, prev_v = 0.0;
    bool have = false;
    for (const auto& snap : traj) {
        if (snap.t < t0 - 1e-12 || snap.t > t1 + 1e-12) continue;
        double v = energy_integrand(snap.config, H, n, s, eps, snap.t, k, rho);
        if (have) acc += 0.5 * (snap.t - prev_t) * (v + prev_v);
        prev_t = snap.t;
        prev_v = v;
        have = true;
    }
    return acc;
}

double default_time_step(int n, const NormalModeConstants& k) {
    double v = std::max({1.0, std::abs(k.v_plus), std::abs(k.v_minus)});
    return std::min(1e-2, 0.1 * n / v);
}

FieldSeries assemble_series(std::uint64_t id, const std::vector<double>& times,
                            const std::vector<std::array<ModeSample, 2>>& samples, double dt, int n,
                            const std::array<double, 2>& velocities) {
    if (times.size() != samples.size()) throw ParameterError("assemble_series: times and samples differ in length");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw ParameterError("assemble_series: sample times must increase");
    FieldSeries fs;
    fs.trajectory_id = id;
    fs.t = times;
    const std::size_t N = times.size();
    for (int s = 0; s < 2; ++s) {
        if (dt * std::abs(velocities[s]) > 0.1 * n) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "time grid too coarse for the %s mode: dt·|v| = %.3g > 0.1·n; use dt <= %.3g",
                          to_string(sign_at(s)), dt * std::abs(velocities[s]), 0.1 * n / std::abs(velocities[s]));
            fs.warnings.emplace_back(buf);
        }
        fs.z[s].resize(N);
        fs.b[s].assign(N, 0.0);
        fs.i[s].assign(N, 0.0);
        fs.qv[s].assign(N, 0.0);
        fs.m[s].assign(N, 0.0);
        for (auto& v : fs.b_pair[s]) v.assign(N, 0.0);
        for (std::size_t k = 0; k < N; ++k) {
            const auto& cur = samples[k][s];
            fs.z[s][k] = cur.z;
            if (k > 0) {
                const auto& prev = samples[k - 1][s];
                const double h = 0.5 * (times[k] - times[k - 1]);
                fs.b[s][k] = fs.b[s][k - 1] + h * (prev.b + cur.b);
                fs.i[s][k] = fs.i[s][k - 1] + h * (prev.i + cur.i);
                fs.qv[s][k] = fs.qv[s][k - 1] + h * (prev.qv + cur.qv);
                for (int q = 0; q < 4; ++q)
                    fs.b_pair[s][q][k] = fs.b_pair[s][q][k - 1] + h * (prev.b_pair[q] + cur.b_pair[q]);
            }
            fs.m[s][k] = fs.z[s][k] - fs.z[s][0] - fs.b[s][k] - fs.i[s][k];
        }
    }
    return fs;
}

struct FieldEngine::Workspace {
    explicit Workspace(int L) : fft(L) {}
    RealFFT fft;
    std::vector<double> ind_a, ind_b, xa, xb;
    std::vector<cplx> spec_a, spec_b, work, tmp;
    // p⋆1_β, p̃⋆1_β, a₊⋆ξ̄^β, a₋⋆ξ̄^α
    std::vector<double> pa, pb, qa, qb, Pa, Pb, Ra, Rb;
    std::vector<double> buf, pha, phb;
    std::vector<double> la, ra, lb, rb;
};

FieldEngine::~FieldEngine() = default;

void FieldEngine::WorkspaceDeleter::operator()(Workspace* w) const { delete w; }

FieldEngine::WorkspacePtr FieldEngine::make_workspace() const {
    WorkspacePtr ws(new Workspace(L_));
    for (auto* v : {&ws->ind_a, &ws->ind_b, &ws->xa, &ws->xb, &ws->pa, &ws->pb, &ws->qa, &ws->qb, &ws->Pa, &ws->Pb,
                    &ws->Ra, &ws->Rb, &ws->buf, &ws->pha, &ws->phb})
        v->assign(L_, 0.0);
    ws->spec_a.resize(ws->fft.spectrum_size());
    ws->spec_b.resize(ws->fft.spectrum_size());
    ws->tmp.resize(ws->fft.spectrum_size());
    return ws;
}

FieldEngine::FieldEngine(const ModelParams& params, const TestFunction& H, const FieldOptions& options)
    : params_(params), H_(H), options_(options), tables_(params), rates_(RateModel::from_params(params)) {
    params_.validate();
    for (double r : params_.densities)
        if (std::abs(r - 1.0 / 3) > 1e-12)
            throw ParameterError("densities: the normal-mode decomposition requires rho_A = rho_B = rho_C = 1/3");
    constants_ = normal_mode_constants(params_, tables_);
    k_n_ = params_.k_n();
    k_star_ = classify_hypothesis(params_).k_star;
    L_ = tables_.lattice_size();
    const int n = params_.n;
    check_support_fits(H_, n, L_);
    if (!(options_.horizon >= 0)) throw ParameterError("horizon: must be nonnegative");
    if (options_.block_refine < 1) throw ParameterError("block_refine: must be at least 1");

    dt_ = options_.dt > 0 ? options_.dt : default_time_step(n, constants_);
    const long steps = options_.horizon > 0 ? static_cast<long>(std::ceil(options_.horizon / dt_ - 1e-9)) : 0;
    if (steps > 0) dt_ = options_.horizon / steps;
    times_.resize(steps + 1);
    for (long k = 0; k <= steps; ++k) times_[k] = k == steps ? options_.horizon : k * dt_;

    const int half = tables_.half();
    RealFFT fft(L_);
    std::vector<double> wp(2 * half + 1, 0.0), wprev(wp), wap(wp), wam(wp), ws(wp), wa(wp);
    double stot = 0.0;
    for (int r = -half; r <= half; ++r) {
        if (r == 0) continue;
        wp[r + half] = tables_.p(r);
        wprev[r + half] = tables_.p(-r);
        ws[r + half] = tables_.s(r);
        wa[r + half] = tables_.a(r);
        if (r > 0) wap[r + half] = tables_.a(r);
        if (r < 0) wam[r + half] = tables_.a(-r);
        p_total_ += tables_.p(r);
        stot += tables_.s(r);
    }
    spec_p_ = correlation_spectrum(fft, wp, half);
    spec_prev_ = correlation_spectrum(fft, wprev, half);
    spec_aplus_ = correlation_spectrum(fft, wap, half);
    spec_aminus_ = correlation_spectrum(fft, wam, half);
    auto spec_s = correlation_spectrum(fft, ws, half);
    auto spec_a = correlation_spectrum(fft, wa, half);

    const auto& rho = params_.densities;
    for (int s = 0; s < 2; ++s) {
        const auto m = constants_.mode(sign_at(s));
        for (int al = 0; al < 3; ++al)
            for (int be = 0; be < 3; ++be) {
                const double d = mode_value(be, m.d1, m.d2, rho) - mode_value(al, m.d1, m.d2, rho);
                w_[s][al][be] = al == be ? 0.0 : rates_(al, be) * d * d;
            }
    }

    const double th = tables_.theta_n;
    std::vector<cplx> work;
    std::vector<double> sh(L_), ah(L_);
    frames_.resize(times_.size());
    for (std::size_t k = 0; k < times_.size(); ++k) {
        for (int s = 0; s < 2; ++s) {
            const auto m = constants_.mode(sign_at(s));
            const double shift = times_[k] * m.v;
            auto& fr = frames_[k];
            fr.h[s] = periodized_profile(H_, n, L_, shift);
            auto g = periodized_gradient(H_, n, L_, shift, false);
            correlate(fft, spec_s, fr.h[s].data(), sh.data(), work);
            correlate(fft, spec_a, fr.h[s].data(), ah.data(), work);
            fr.p_h[s].resize(L_);
            correlate(fft, spec_p_, fr.h[s].data(), fr.p_h[s].data(), work);
            const double pre = 2 * m.lambda * k_n_ / 3;
            fr.drift[s].resize(L_);
            for (int x = 0; x < L_; ++x)
                fr.drift[s][x] = 2 * th * (sh[x] - stot * fr.h[s][x]) - pre * (th * ah[x] - tables_.m_n_gamma / n * g[x]);
        }
    }

    if (!options_.block_eps.empty()) {
        for (double e : options_.block_eps) {
            int l = block_length(e, n);
            if (4 * l > L_) throw ParameterError("eps: block longer than L/4");
            block_lengths_.push_back(l);
        }
        const long fine = steps * options_.block_refine;
        block_times_.resize(fine + 1);
        for (long j = 0; j <= fine; ++j) block_times_[j] = j == fine ? options_.horizon : j * (dt_ / options_.block_refine);
        const double R = H_.support_radius();
        block_frames_.resize(block_times_.size());
        for (std::size_t j = 0; j < block_times_.size(); ++j) {
            for (int s = 0; s < 2; ++s) {
                const double shift = block_times_[j] * constants_.mode(sign_at(s)).v;
                auto& bf = block_frames_[j];
                const long lo = static_cast<long>(std::ceil((H_.center() - R) * n + shift)) - 1;
                const long hi = static_cast<long>(std::floor((H_.center() + R) * n + shift)) + 1;
                bf.start[s] = lo;
                bf.grad[s].resize(hi - lo + 1);
                bf.grad_floor[s].resize(hi - lo + 1);
                for (long x = lo; x <= hi; ++x) {
                    const double arg = static_cast<double>(x) - shift;
                    bf.grad[s][x - lo] = H_.grad(arg / n);
                    bf.grad_floor[s][x - lo] = H_.grad(std::floor(arg) / n);
                }
            }
        }
    }
}

std::array<ModeSample, 2> FieldEngine::evaluate(const Configuration& c, std::size_t k, Workspace& ws) const {
    if (c.size() != L_) throw ParameterError("configuration size does not match the lattice");
    if (k >= frames_.size()) throw ParameterError("sample index out of range");
    const auto& rho = params_.densities;
    const auto& fr = frames_[k];
    for (int x = 0; x < L_; ++x) {
        ws.ind_a[x] = c[x] == A ? 1.0 : 0.0;
        ws.ind_b[x] = c[x] == B ? 1.0 : 0.0;
        ws.xa[x] = ws.ind_a[x] - rho[A];
        ws.xb[x] = ws.ind_b[x] - rho[B];
    }
    auto& fft = ws.fft;
    fft.forward(ws.ind_a.data(), ws.spec_a.data());
    fft.forward(ws.ind_b.data(), ws.spec_b.data());
    auto apply = [&](const std::vector<cplx>& sp, const std::vector<cplx>& kern, std::vector<double>& out) {
        for (std::size_t j = 0; j < sp.size(); ++j) ws.tmp[j] = sp[j] * kern[j];
        fft.inverse(ws.tmp.data(), out.data());
    };
    const bool nonlinear = k_n_ != 0.0;
    apply(ws.spec_a, spec_p_, ws.pa);
    apply(ws.spec_b, spec_p_, ws.pb);
    apply(ws.spec_a, spec_prev_, ws.qa);
    apply(ws.spec_b, spec_prev_, ws.qb);
    if (nonlinear) {
        // a₊ and a₋ have the same total; ξ̄ = 1 − ρ shifts each correlation by ρ·total
        const double atot = std::real(spec_aplus_[0]);
        apply(ws.spec_a, spec_aplus_, ws.Pa);
        apply(ws.spec_b, spec_aplus_, ws.Pb);
        apply(ws.spec_a, spec_aminus_, ws.Ra);
        apply(ws.spec_b, spec_aminus_, ws.Rb);
        for (int x = 0; x < L_; ++x) {
            ws.Pa[x] -= rho[A] * atot;
            ws.Pb[x] -= rho[B] * atot;
            ws.Ra[x] -= rho[A] * atot;
            ws.Rb[x] -= rho[B] * atot;
        }
    }

    const double sqn = std::sqrt(static_cast<double>(params_.n));
    const double th = tables_.theta_n;
    std::array<ModeSample, 2> out;
    for (int s = 0; s < 2; ++s) {
        const auto m = constants_.mode(sign_at(s));
        const auto& h = fr.h[s];
        const auto& F = fr.drift[s];
        const auto& w = w_[s];
        double z = 0.0, i = 0.0;
        std::array<double, 4> bp{0, 0, 0, 0};
        for (int x = 0; x < L_; ++x) {
            const double f = m.d1 * ws.xa[x] + m.d2 * ws.xb[x];
            z += h[x] * f;
            i += F[x] * f;
            if (nonlinear && h[x] != 0.0) {
                bp[AA] += h[x] * (ws.xa[x] * ws.Ra[x] - ws.xa[x] * ws.Pa[x]);
                bp[BB] += h[x] * (ws.xb[x] * ws.Rb[x] - ws.xb[x] * ws.Pb[x]);
                bp[AB] += h[x] * (ws.xb[x] * ws.Ra[x] - ws.xa[x] * ws.Pb[x]);
                bp[BA] += h[x] * (ws.xa[x] * ws.Rb[x] - ws.xb[x] * ws.Pa[x]);
            }
        }
        auto& o = out[s];
        o.z = z / sqn;
        o.i = i / sqn;
        const double pre = th * k_n_ / sqn;
        for (int q = 0; q < 4; ++q) o.b_pair[q] = pre * bp[q];
        o.b = combine_pairs(o.b_pair, m);

        // quadratic variation: Σ h²U + Σ h²V − 2 Σ h W
        for (int x = 0; x < L_; ++x) ws.buf[x] = h[x] * ws.ind_a[x];
        fft.forward(ws.buf.data(), ws.tmp.data());
        for (std::size_t j = 0; j < ws.tmp.size(); ++j) ws.tmp[j] *= spec_p_[j];
        fft.inverse(ws.tmp.data(), ws.pha.data());
        for (int x = 0; x < L_; ++x) ws.buf[x] = h[x] * ws.ind_b[x];
        fft.forward(ws.buf.data(), ws.tmp.data());
        for (std::size_t j = 0; j < ws.tmp.size(); ++j) ws.tmp[j] *= spec_p_[j];
        fft.inverse(ws.tmp.data(), ws.phb.data());
        const auto& ph = fr.p_h[s];
        double acc = 0.0;
        for (int x = 0; x < L_; ++x) {
            const int sx = c[x];
            const double pc = p_total_ - ws.pa[x] - ws.pb[x];
            const double qc = p_total_ - ws.qa[x] - ws.qb[x];
            const double U = w[sx][A] * ws.pa[x] + w[sx][B] * ws.pb[x] + w[sx][C] * pc;
            const double V = w[A][sx] * ws.qa[x] + w[B][sx] * ws.qb[x] + w[C][sx] * qc;
            const double phc = ph[x] - ws.pha[x] - ws.phb[x];
            const double W = w[sx][A] * ws.pha[x] + w[sx][B] * ws.phb[x] + w[sx][C] * phc;
            acc += h[x] * (h[x] * (U + V) - 2 * W);
        }
        o.qv = std::max(0.0, th / params_.n * acc);
    }
    return out;
}

void FieldEngine::evaluate_blocks(const Configuration& c, std::size_t j, Workspace& ws,
                                  std::vector<std::array<double, 2>>& energy,
                                  std::vector<std::array<std::array<double, 4>, 2>>& substitute_pair) const {
    if (j >= block_frames_.size()) throw ParameterError("block sample index out of range");
    const auto& rho = params_.densities;
    for (int x = 0; x < L_; ++x) {
        ws.xa[x] = (c[x] == A ? 1.0 : 0.0) - rho[A];
        ws.xb[x] = (c[x] == B ? 1.0 : 0.0) - rho[B];
    }
    const auto& bf = block_frames_[j];
    const double km = k_star_ == 0.0 ? 0.0 : k_star_ * tables_.m_a;
    energy.assign(block_lengths_.size(), {0.0, 0.0});
    substitute_pair.assign(block_lengths_.size(), {});
    for (std::size_t e = 0; e < block_lengths_.size(); ++e) {
        block_means(ws.xa, block_lengths_[e], ws.la, ws.ra);
        block_means(ws.xb, block_lengths_[e], ws.lb, ws.rb);
        const std::vector<double>* left[2] = {&ws.la, &ws.lb};
        const std::vector<double>* right[2] = {&ws.ra, &ws.rb};
        for (int s = 0; s < 2; ++s) {
            const auto m = constants_.mode(sign_at(s));
            const auto& g = bf.grad[s];
            const auto& gf = bf.grad_floor[s];
            double en = 0.0;
            std::array<double, 4> sp{0, 0, 0, 0};
            for (std::size_t q = 0; q < g.size(); ++q) {
                const int x = wrap_site(bf.start[s] + static_cast<long>(q), L_);
                const double fl = m.d1 * ws.la[x] + m.d2 * ws.lb[x];
                const double fr = m.d1 * ws.ra[x] + m.d2 * ws.rb[x];
                en += g[q] * fl * fr;
                if (km != 0.0)
                    for (int pi = 0; pi < 4; ++pi)
                        sp[pi] += gf[q] * (*left[kPairAlpha[pi]])[x] * (*right[kPairBeta[pi]])[x];
            }
            energy[e][s] = en;
            for (int pi = 0; pi < 4; ++pi) substitute_pair[e][s][pi] = km * sp[pi];
        }
    }
}

} // namespace abc
