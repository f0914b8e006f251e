#include "abcsim/operators.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "abcsim/csv.hpp"
#include "abcsim/errors.hpp"
#include "abcsim/fft.hpp"

namespace abc {

namespace {

constexpr double kPi = 3.14159265358979323846;
// sqrt(2 ln 1e14): exp(-x²/2) < 1e-14 beyond this many widths
constexpr double kGaussCut = 8.0264936186727738;

template <class F>
double gk(F f, double a, double b, double* err) {
    if (b <= a) return 0.0;
    double e = 0.0;
    double r = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 8, 1e-11, &e);
    if (err) *err += e;
    return r;
}

// Piecewise quadrature over [a, b] with pieces no longer than `piece`.
template <class F>
double gk_pieces(F f, double a, double b, double piece, double* err) {
    if (b <= a) return 0.0;
    int m = std::max(1, static_cast<int>(std::ceil((b - a) / piece)));
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += gk(f, a + (b - a) * i / m, a + (b - a) * (i + 1) / m, err);
    return s;
}

// Breakpoints h, 2h, 4h, ... up to `scale`, then steps of `scale` up to V.
std::vector<double> breakpoints(double h, double scale, double V, double extra = -1.0) {
    std::vector<double> pts{h};
    double x = h;
    while (x * 2 < scale && x * 2 < V) {
        x *= 2;
        pts.push_back(x);
    }
    while (x + scale < V) {
        x += scale;
        pts.push_back(x);
    }
    pts.push_back(V);
    if (extra > h && extra < V) pts.push_back(extra);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

template <class F>
double integrate_on(F f, const std::vector<double>& pts, double* err) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) s += gk(f, pts[i], pts[i + 1], err);
    return s;
}

double c_gamma_of(double gamma) { return 0.5 / zeta(1.0 + gamma); }

double c_hat_of(double gamma) {
    double cg = c_gamma_of(gamma);
    if (gamma == 2.0) return 2.0 * cg;
    if (gamma > 2.0) return 2.0 * cg * zeta(gamma - 1.0);
    return 0.0;
}

void check_numeric(double value, double err, const char* what) {
    if (!std::isfinite(value) || err > 1e-6 * (std::abs(value) + 1e-6))
        throw NumericalError(std::string(what) + ": quadrature did not converge (estimate " + format_double(value) +
                             ", error " + format_double(err) + ")");
}

// ∫_S^∞ cos(s) s^{-a} ds and ∫_S^∞ sin(s) s^{-a} ds for S a multiple of 2π (integration by parts)
double tail_cos(double S, double a, int depth = 6);
double tail_sin(double S, double a, int depth = 6) {
    if (depth == 0) return 0.0;
    return std::pow(S, -a) - a * tail_cos(S, a + 1.0, depth - 1);
}
double tail_cos(double S, double a, int depth) {
    if (depth == 0) return 0.0;
    return a * tail_sin(S, a + 1.0, depth - 1);
}

// ∫_0^∞ (1 − cos s) s^{-1-γ} ds
double integral_one_minus_cos(double gamma) {
    const double h = 0.01;
    double taylor = std::pow(h, 2 - gamma) / (2 * (2 - gamma)) - std::pow(h, 4 - gamma) / (24 * (4 - gamma)) +
                    std::pow(h, 6 - gamma) / (720 * (6 - gamma));
    const double S = 2 * kPi * 400;
    double err = 0.0;
    auto f = [gamma](double s) { return (1 - std::cos(s)) * std::pow(s, -1 - gamma); };
    double mid = gk(f, h, 2 * kPi, &err) + gk_pieces(f, 2 * kPi, S, 2 * kPi, &err);
    double tail = std::pow(S, -gamma) / gamma - tail_cos(S, 1 + gamma);
    return taylor + mid + tail;
}

// ∫_0^∞ (sin s − s·1{γ>1}) s^{-1-γ} ds, γ ∈ (0,1) ∪ (1,2)
double integral_sine(double gamma) {
    const double h = 0.01;
    const bool comp = gamma > 1.0;
    double taylor = -std::pow(h, 3 - gamma) / (6 * (3 - gamma)) + std::pow(h, 5 - gamma) / (120 * (5 - gamma)) -
                    std::pow(h, 7 - gamma) / (5040 * (7 - gamma));
    if (!comp) taylor += std::pow(h, 1 - gamma) / (1 - gamma);
    const double S = 2 * kPi * 400;
    double err = 0.0;
    auto f = [gamma, comp](double s) { return (std::sin(s) - (comp ? s : 0.0)) * std::pow(s, -1 - gamma); };
    double mid = gk(f, h, 2 * kPi, &err) + gk_pieces(f, 2 * kPi, S, 2 * kPi, &err);
    double tail = tail_sin(S, 1 + gamma) - (comp ? std::pow(S, 1 - gamma) / (gamma - 1) : 0.0);
    return taylor + mid + tail;
}

} // namespace

std::string to_string(Family f) {
    switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::bump: return "bump";
    default: return "modulated_gaussian";
    }
}

Family family_from_string(const std::string& s) {
    if (s == "gaussian") return Family::gaussian;
    if (s == "bump") return Family::bump;
    if (s == "modulated_gaussian") return Family::modulated_gaussian;
    throw ParameterError("unknown test-function family '" + s + "'");
}

TestFunction TestFunction::gaussian(double center, double width) {
    if (!(width > 0)) throw ParameterError("gaussian: width must be positive");
    TestFunction t;
    t.family_ = Family::gaussian;
    t.center_ = center;
    t.width_ = width;
    return t;
}

TestFunction TestFunction::bump(double center, double halfwidth) {
    if (!(halfwidth > 0)) throw ParameterError("bump: halfwidth must be positive");
    TestFunction t;
    t.family_ = Family::bump;
    t.center_ = center;
    t.width_ = halfwidth;
    return t;
}

TestFunction TestFunction::modulated_gaussian(double center, double width, double k) {
    if (!(width > 0)) throw ParameterError("modulated_gaussian: width must be positive");
    TestFunction t;
    t.family_ = Family::modulated_gaussian;
    t.center_ = center;
    t.width_ = width;
    t.k_ = k;
    return t;
}

double TestFunction::operator()(double u) const {
    const double x = u - center_;
    switch (family_) {
    case Family::gaussian: return std::exp(-x * x / (2 * width_ * width_));
    case Family::bump: {
        double s = x / width_;
        if (std::abs(s) >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - s * s));
    }
    default: return std::exp(-x * x / (2 * width_ * width_)) * std::cos(2 * kPi * k_ * x);
    }
}

double TestFunction::grad(double u) const {
    const double x = u - center_;
    const double w2 = width_ * width_;
    switch (family_) {
    case Family::gaussian: return -x / w2 * std::exp(-x * x / (2 * w2));
    case Family::bump: {
        double s = x / width_;
        if (std::abs(s) >= 1.0) return 0.0;
        double q = 1.0 - s * s;
        return std::exp(1.0 - 1.0 / q) * (-2.0 * s / (q * q)) / width_;
    }
    default: {
        double g = std::exp(-x * x / (2 * w2));
        double kap = 2 * kPi * k_;
        return -x / w2 * g * std::cos(kap * x) - kap * g * std::sin(kap * x);
    }
    }
}

double TestFunction::lap(double u) const {
    const double x = u - center_;
    const double w2 = width_ * width_;
    switch (family_) {
    case Family::gaussian: return (x * x / (w2 * w2) - 1.0 / w2) * std::exp(-x * x / (2 * w2));
    case Family::bump: {
        double s = x / width_;
        if (std::abs(s) >= 1.0) return 0.0;
        double q = 1.0 - s * s;
        double p1 = -2.0 * s / (q * q);
        double p2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
        return std::exp(1.0 - 1.0 / q) * (p2 + p1 * p1) / (width_ * width_);
    }
    default: {
        double g = std::exp(-x * x / (2 * w2));
        double g1 = -x / w2 * g;
        double g2 = (x * x / (w2 * w2) - 1.0 / w2) * g;
        double kap = 2 * kPi * k_;
        double c = std::cos(kap * x), s = std::sin(kap * x);
        return g2 * c - 2 * kap * g1 * s - kap * kap * g * c;
    }
    }
}

double TestFunction::d3(double u) const {
    const double d = 1e-2 * scale();
    return (lap(u + d) - lap(u - d)) / (2 * d);
}

double TestFunction::d4(double u) const {
    const double d = 1e-2 * scale();
    return (lap(u + d) - 2 * lap(u) + lap(u - d)) / (d * d);
}

double TestFunction::d5(double u) const {
    const double d = 1e-2 * scale();
    return (lap(u + 2 * d) - 2 * lap(u + d) + 2 * lap(u - d) - lap(u - 2 * d)) / (2 * d * d * d);
}

double TestFunction::d6(double u) const {
    const double d = 2e-2 * scale();
    return (lap(u + 2 * d) - 4 * lap(u + d) + 6 * lap(u) - 4 * lap(u - d) + lap(u - 2 * d)) / (d * d * d * d);
}

double TestFunction::support_radius() const {
    return family_ == Family::bump ? width_ : width_ * kGaussCut;
}

double TestFunction::scale() const {
    switch (family_) {
    case Family::gaussian: return width_;
    case Family::bump: return width_ / 4;
    default: return k_ > 0 ? std::min(width_, 1.0 / (2 * kPi * k_)) : width_;
    }
}

TestFunction TestFunction::shifted(double delta) const {
    TestFunction t = *this;
    t.center_ += delta;
    return t;
}

TestFunction TestFunction::dilated(double a) const {
    if (!(a > 0)) throw ParameterError("dilated: factor must be positive");
    TestFunction t = *this;
    t.center_ *= a;
    t.width_ *= a;
    t.k_ /= a;
    return t;
}

std::complex<double> TestFunction::fourier(double xi) const {
    if (family_ == Family::bump) throw ParameterError("fourier: no closed form for the bump family");
    auto centered = [this](double f) { return width_ * std::sqrt(2 * kPi) * std::exp(-2 * kPi * kPi * width_ * width_ * f * f); };
    std::complex<double> phase = std::polar(1.0, -2 * kPi * xi * center_);
    if (family_ == Family::gaussian) return centered(xi) * phase;
    return 0.5 * (centered(xi - k_) + centered(xi + k_)) * phase;
}

GridFunction sample_grid(const TestFunction& H, int n, long x0, long count) {
    GridFunction g;
    g.n = n;
    g.x0 = x0;
    g.values.resize(count);
    const double R = H.support_radius();
    for (long i = 0; i < count; ++i) {
        double u = static_cast<double>(x0 + i) / n;
        g.values[i] = std::abs(u - H.center()) <= R ? H(u) : 0.0;
    }
    return g;
}

double discrete_l2_norm(const TestFunction& H, int n) {
    if (n < 1) throw ParameterError("discrete_l2_norm: n must be positive");
    const double R = H.support_radius();
    long lo = static_cast<long>(std::floor((H.center() - R) * n)) - 1;
    long hi = static_cast<long>(std::ceil((H.center() + R) * n)) + 1;
    return discrete_l2_norm(sample_grid(H, n, lo, hi - lo + 1));
}

double discrete_l2_norm(const GridFunction& g) {
    double s = 0.0;
    for (double v : g.values) s += v * v;
    return s / g.n;
}

GridFunction discrete_sym_op(const TestFunction& H, int n, const KernelTables& t, long x0, long count,
                             LatticeRange range) {
    const int half = t.half();
    if (range == LatticeRange::infinite) {
        double reach = std::max(std::abs(static_cast<double>(x0) / n - H.center()),
                                std::abs(static_cast<double>(x0 + count - 1) / n - H.center())) +
                       H.support_radius();
        if (reach * n >= half) throw ParameterError("discrete_sym_op: stencil range too short for the support on Z");
    }
    GridFunction h = sample_grid(H, n, x0 - half, count + 2 * half);
    std::vector<double> sd(half + 1);
    for (int d = 1; d <= half; ++d) sd[d] = t.s(d);
    GridFunction out;
    out.n = n;
    out.x0 = x0;
    out.values.resize(count);
    const double th = t.theta_n;
    for (long i = 0; i < count; ++i) {
        const double* c = &h.values[i + half];
        const double h0 = c[0];
        double acc = 0.0;
        for (int d = 1; d <= half; ++d) acc += sd[d] * (c[d] + c[-d] - 2 * h0);
        double v = 2 * th * acc;
        if (range == LatticeRange::infinite) v -= 2 * th * h0 * t.truncated_mass;
        out.values[i] = v;
    }
    return out;
}

GridFunction discrete_asym_op(const TestFunction& H, int n, double lambda, double k_n, const KernelTables& t,
                              long x0, long count) {
    const int half = t.half();
    GridFunction out;
    out.n = n;
    out.x0 = x0;
    out.values.assign(count, 0.0);
    if (lambda == 0.0 || k_n == 0.0 || t.a(1) == 0.0) return out;
    GridFunction h = sample_grid(H, n, x0 - half, count + 2 * half);
    std::vector<double> ad(half + 1);
    for (int d = 1; d <= half; ++d) ad[d] = t.a(d);
    const double pre = 2 * lambda * k_n / 3;
    for (long i = 0; i < count; ++i) {
        const double* c = &h.values[i + half];
        double acc = 0.0;
        for (int d = 1; d <= half; ++d) acc += ad[d] * (c[d] - c[-d]);
        double u = static_cast<double>(x0 + i) / n;
        out.values[i] = pre * (t.theta_n * acc - t.m_n_gamma / n * H.grad(u));
    }
    return out;
}

double continuum_sym_op(const TestFunction& H, double gamma, double u, QuadratureInfo* info) {
    if (!(gamma > 0)) throw ParameterError("continuum_sym_op: gamma must be positive");
    if (gamma >= 2.0) return c_hat_of(gamma) * H.lap(u);
    const double cg = c_gamma_of(gamma);
    const double scale = H.scale();
    const double d6 = std::abs(H.d6(u)) + 1e-300;
    double h = 0.05 * scale;
    auto bound = [&](double hh) { return 2 * cg * d6 / 360 * std::pow(hh, 6 - gamma) / (6 - gamma); };
    while (bound(h) > 1e-10 && h > 1e-4 * scale) h *= 0.5;
    const double h0 = H(u);
    double taylor = H.lap(u) * std::pow(h, 2 - gamma) / (2 - gamma) +
                    H.d4(u) * std::pow(h, 4 - gamma) / (12 * (4 - gamma));
    const double V = std::max(std::abs(u - H.center()) + H.support_radius(), 2 * h);
    double err = 0.0;
    auto f = [&](double v) { return (H(u + v) + H(u - v) - 2 * h0) * std::pow(v, -1 - gamma); };
    double mid = integrate_on(f, breakpoints(h, scale, V), &err);
    double far = -2 * h0 * std::pow(V, -gamma) / gamma;
    double value = 2 * cg * (taylor + mid + far);
    check_numeric(value, 2 * cg * err, "continuum_sym_op");
    if (info) {
        info->abs_error += 2 * cg * err;
        info->taylor_h = h;
        info->taylor_bound = bound(h);
    }
    return value;
}

double continuum_asym_op(const TestFunction& G, double gamma, double lambda, double K, double c_plus,
                         double c_minus, double u, QuadratureInfo* info) {
    if (!(gamma > 0)) throw ParameterError("continuum_asym_op: gamma must be positive");
    if (gamma >= 2.0 || lambda == 0.0 || K == 0.0 || c_plus == c_minus) return 0.0;
    const double pre = K * (c_plus - c_minus) * lambda / 3;
    const double scale = G.scale();
    const double g1 = G.grad(u), g3 = G.d3(u), g5 = G.d5(u);
    // θ(v) = v near 0 for γ ≥ 1 (the γ = 1 window [-1,1] contains [0, h])
    const bool comp = gamma >= 1.0;
    double h = 0.05 * std::min(scale, 1.0);
    auto last = [&](double hh) { return std::abs(g5) / 60 * std::pow(hh, 5 - gamma) / (5 - gamma); };
    while (last(h) * std::pow(h / scale, 2) > 1e-10 && h > 1e-4 * scale) h *= 0.5;
    double taylor = g3 * std::pow(h, 3 - gamma) / (3 * (3 - gamma)) + g5 * std::pow(h, 5 - gamma) / (60 * (5 - gamma));
    if (!comp) taylor += 2 * g1 * std::pow(h, 1 - gamma) / (1 - gamma);
    const double V = std::max({std::abs(u - G.center()) + G.support_radius(), 2 * h, 1.5});
    auto theta = [gamma](double v) {
        if (gamma < 1.0) return 0.0;
        if (gamma == 1.0) return v <= 1.0 ? v : 0.0;
        return v;
    };
    double err = 0.0;
    auto f = [&](double v) { return (G(u + v) - G(u - v) - 2 * theta(v) * g1) * std::pow(v, -1 - gamma); };
    double mid = integrate_on(f, breakpoints(h, scale, V, gamma == 1.0 ? 1.0 : -1.0), &err);
    double far = gamma > 1.0 ? -2 * g1 * std::pow(V, 1 - gamma) / (gamma - 1) : 0.0;
    double value = pre * (taylor + mid + far);
    check_numeric(value, std::abs(pre) * err, "continuum_asym_op");
    if (info) {
        info->abs_error += std::abs(pre) * err;
        info->taylor_h = h;
        info->taylor_bound = std::abs(pre) * last(h) * std::pow(h / scale, 2);
    }
    return value;
}

namespace {

// ∫ f over the support of H, split into pieces of the function's scale
template <class F>
double support_integral(const TestFunction& H, F f, double lo_extra = 0.0, double hi_extra = 0.0, double* err = nullptr) {
    const double R = H.support_radius();
    return gk_pieces(f, H.center() - R - lo_extra, H.center() + R + hi_extra, H.scale(), err);
}

} // namespace

double l2_norm_sq(const TestFunction& H) {
    return support_integral(H, [&](double u) { return H(u) * H(u); });
}

double grad_l2_norm_sq(const TestFunction& H) {
    return support_integral(H, [&](double u) { return H.grad(u) * H.grad(u); });
}

double seminorm(const TestFunction& H, double gamma) {
    if (!(gamma > 0)) throw ParameterError("seminorm: gamma must be positive");
    if (gamma >= 2.0) return c_hat_of(gamma) * grad_l2_norm_sq(H);
    const double cg = c_gamma_of(gamma);
    const double R = H.support_radius();
    const double scale = H.scale();
    const double n0 = l2_norm_sq(H);
    const double n1 = grad_l2_norm_sq(H);
    const double n2 = support_integral(H, [&](double u) { return H.lap(u) * H.lap(u); });
    const double n3 = support_integral(H, [&](double u) { return H.d3(u) * H.d3(u); });
    double h = 0.05 * scale;
    auto bound = [&](double hh) { return n3 / 360 * std::pow(hh, 6 - gamma) / (6 - gamma); };
    while (bound(h) > 1e-10 * (n1 + 1e-300) && h > 1e-4 * scale) h *= 0.5;
    double taylor = n1 * std::pow(h, 2 - gamma) / (2 - gamma) - n2 * std::pow(h, 4 - gamma) / (12 * (4 - gamma)) +
                    n3 * std::pow(h, 6 - gamma) / (360 * (6 - gamma));
    double err = 0.0;
    auto phi = [&](double w) {
        double e = 0.0;
        return support_integral(H, [&](double u) {
            double d = H(u + w) - H(u);
            return d * d;
        }, w, 0.0, &e);
    };
    const double W = 2 * R;
    double mid = integrate_on([&](double w) { return phi(w) * std::pow(w, -1 - gamma); }, breakpoints(h, scale, W), &err);
    double far = 2 * n0 * std::pow(W, -gamma) / gamma;
    double value = 2 * cg * (taylor + mid + far);
    if (!std::isfinite(value)) throw NumericalError("seminorm: non-finite value (test function lacks decay?)");
    check_numeric(value, 2 * cg * err, "seminorm");
    return value;
}

double multiplier_sym_constant(double gamma) {
    if (!(gamma > 0 && gamma < 2)) throw ParameterError("multiplier_sym_constant: gamma must lie in (0,2)");
    return 4 * c_gamma_of(gamma) * integral_one_minus_cos(gamma);
}

double multiplier_asym_constant(double gamma, double K, double c_plus, double c_minus) {
    if (!(gamma > 0 && gamma < 2) || gamma == 1.0)
        throw ParameterError("multiplier_asym_constant: gamma must lie in (0,1) or (1,2)");
    return 2 * K * (c_plus - c_minus) * integral_sine(gamma) / 3;
}

namespace {

// 2 Re ∫_0^Ξ Ĥ(ξ) m(ξ) e^{2πiξu} dξ over the frequency support of a gaussian family
template <class M>
double fourier_apply(const TestFunction& H, double u, M m) {
    if (!H.has_fourier()) throw ParameterError("fourier route requires a gaussian test function");
    const double xi_max = std::abs(H.wavenumber()) + 2.5 / H.width();
    auto f = [&](double xi) { return (H.fourier(xi) * m(xi) * std::polar(1.0, 2 * kPi * xi * u)).real(); };
    std::vector<double> pts{0.0, xi_max};
    if (H.wavenumber() != 0.0) pts.insert(pts.begin() + 1, std::abs(H.wavenumber()));
    double err = 0.0, s = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        s += gk_pieces(f, pts[i], pts[i + 1], 0.25 / H.width(), &err);
    return 2 * s;
}

} // namespace

double fourier_sym_op(const TestFunction& H, double gamma, double u) {
    if (gamma >= 2.0) {
        double ch = c_hat_of(gamma);
        return fourier_apply(H, u, [ch](double xi) { return std::complex<double>(-ch * std::pow(2 * kPi * xi, 2), 0.0); });
    }
    const double C = multiplier_sym_constant(gamma);
    return fourier_apply(H, u, [C, gamma](double xi) { return std::complex<double>(-C * std::pow(2 * kPi * xi, gamma), 0.0); });
}

double fourier_asym_op(const TestFunction& G, double gamma, double lambda, double K, double c_plus, double c_minus,
                       double u) {
    if (gamma >= 2.0) return 0.0;
    const double Ch = multiplier_asym_constant(gamma, K, c_plus, c_minus);
    return fourier_apply(G, u, [=](double xi) { return std::complex<double>(0.0, lambda * Ch * std::pow(2 * kPi * xi, gamma)); });
}

OuReference::OuReference(const KernelTables& tables, int n, double lambda, double k_n, double d3)
    : t_(tables), n_(n), M_(tables.lattice_size()), lambda_(lambda), k_n_(k_n), d3_(d3) {
    const int half = t_.half();
    RealFFT fft(M_);
    std::vector<double> ws(2 * half + 1, 0.0), wa(2 * half + 1, 0.0);
    for (int r = -half; r <= half; ++r) {
        if (r == 0) continue;
        ws[r + half] = t_.s(r);
        wa[r + half] = t_.a(r);
    }
    auto cs = correlation_spectrum(fft, ws, half);
    auto ca = correlation_spectrum(fft, wa, half);
    const double th = t_.theta_n;
    const double pre = 2 * lambda_ * k_n_ / 3;
    symbol_.resize(cs.size());
    for (std::size_t j = 0; j < cs.size(); ++j) {
        double theta_j = (M_ % 2 == 0 && static_cast<int>(j) == M_ / 2) ? 0.0 : 2 * kPi * static_cast<double>(j) / M_;
        std::complex<double> sym = 2 * th * (cs[j] - cs[0]);
        std::complex<double> asym = pre * (th * (ca[j] - ca[0]) - std::complex<double>(0.0, t_.m_n_gamma * theta_j));
        symbol_[j] = sym - asym;
    }
}

std::vector<double> OuReference::grid_values(const TestFunction& H) const {
    const double P = static_cast<double>(M_) / n_;
    const double R = H.support_radius();
    if (2 * R >= P) throw ParameterError("OU reference: test-function support does not fit on the grid");
    std::vector<double> h(M_);
    for (int x = 0; x < M_; ++x) {
        double u = static_cast<double>(x) / n_;
        u -= P * std::round((u - H.center()) / P);
        h[x] = std::abs(u - H.center()) <= R ? H(u) : 0.0;
    }
    return h;
}

std::vector<double> OuReference::apply_exp(const std::vector<double>& h, double t) const {
    RealFFT fft(M_);
    std::vector<std::complex<double>> spec(fft.spectrum_size());
    fft.forward(h.data(), spec.data());
    for (std::size_t j = 0; j < spec.size(); ++j) {
        std::complex<double> e = std::exp(t * symbol_[j]);
        if (!std::isfinite(e.real()) || !std::isfinite(e.imag()))
            throw NumericalError("OU reference: exponential overflow");
        spec[j] *= e;
    }
    std::vector<double> out(M_);
    fft.inverse(spec.data(), out.data());
    return out;
}

std::vector<double> OuReference::spectral_gradient(const std::vector<double>& h) const {
    RealFFT fft(M_);
    std::vector<std::complex<double>> spec(fft.spectrum_size());
    fft.forward(h.data(), spec.data());
    for (std::size_t j = 0; j < spec.size(); ++j) {
        double theta_j = (M_ % 2 == 0 && static_cast<int>(j) == M_ / 2) ? 0.0 : 2 * kPi * static_cast<double>(j) / M_;
        spec[j] *= std::complex<double>(0.0, theta_j * n_);
    }
    std::vector<double> out(M_);
    fft.inverse(spec.data(), out.data());
    return out;
}

std::vector<double> OuReference::apply_generator(const std::vector<double>& h) const {
    const int half = t_.half();
    const double th = t_.theta_n;
    const double pre = 2 * lambda_ * k_n_ / 3;
    std::vector<double> grad = spectral_gradient(h);
    std::vector<double> out(M_);
    auto at = [&](long x) { return h[((x % M_) + M_) % M_]; };
    for (int x = 0; x < M_; ++x) {
        double sym = 0.0, asym = 0.0;
        for (int d = 1; d <= half; ++d) {
            double hp = at(static_cast<long>(x) + d), hm = at(static_cast<long>(x) - d);
            sym += t_.s(d) * (hp + hm - 2 * h[x]);
            asym += t_.a(d) * (hp - hm);
        }
        out[x] = 2 * th * sym - pre * (th * asym - t_.m_n_gamma / n_ * grad[x]);
    }
    return out;
}

double OuReference::covariance(const TestFunction& H, const TestFunction& G, double t) const {
    auto h = grid_values(H);
    auto g = grid_values(G);
    auto e = apply_exp(h, t);
    double s = 0.0;
    for (int x = 0; x < M_; ++x) s += e[x] * g[x];
    return d3_ * s / n_;
}

double OuReference::series_covariance(const TestFunction& H, const TestFunction& G, double t, int terms) const {
    auto h = grid_values(H);
    auto g = grid_values(G);
    std::vector<double> acc = h, v = h;
    for (int k = 1; k <= terms; ++k) {
        v = apply_generator(v);
        for (auto& x : v) x *= t / k;
        for (int x = 0; x < M_; ++x) acc[x] += v[x];
    }
    double s = 0.0;
    for (int x = 0; x < M_; ++x) s += acc[x] * g[x];
    return d3_ * s / n_;
}

double ou_reference_covariance(const TestFunction& H, const TestFunction& G, double t, const ModelParams& params,
                               double lambda, double d3) {
    KernelTables tables(params);
    OuReference ref(tables, params.n, lambda, params.k_n(), d3);
    return ref.covariance(H, G, t);
}

std::vector<ConvergenceRow> operator_convergence(const TestFunction& H, double gamma, const std::vector<int>& ns,
                                                 double asymmetry, double lambda, double K) {
    if (ns.empty()) return {};
    const int nmax = *std::max_element(ns.begin(), ns.end());
    for (int n : ns)
        if (nmax % n != 0) throw ParameterError("operator_convergence: each n must divide the largest n");
    const double R = H.support_radius();
    const double W = 2 * R;
    const double c = H.center();
    auto kn = normalize_kernel(gamma, asymmetry);

    // continuum values on the finest grid
    const long lo = static_cast<long>(std::ceil((c - W) * nmax));
    const long hi = static_cast<long>(std::floor((c + W) * nmax));
    std::vector<double> csym(hi - lo + 1), casym(hi - lo + 1);
    for (long x = lo; x <= hi; ++x) {
        double u = static_cast<double>(x) / nmax;
        csym[x - lo] = continuum_sym_op(H, gamma, u);
        casym[x - lo] = continuum_asym_op(H, gamma, lambda, K, kn.c_plus, kn.c_minus, u);
    }

    std::vector<ConvergenceRow> rows;
    for (int n : ns) {
        ModelParams p;
        p.gamma = gamma;
        p.c_plus = kn.c_plus;
        p.c_minus = kn.c_minus;
        p.n = n;
        p.lattice_size = 2 * (static_cast<int>(std::ceil((W + R) * n)) + 2);
        KernelTables t(p);
        const int stride = nmax / n;
        const long xlo = static_cast<long>(std::ceil((c - W) * n));
        const long xhi = static_cast<long>(std::floor((c + W) * n));
        auto ds = discrete_sym_op(H, n, t, xlo, xhi - xlo + 1, LatticeRange::infinite);
        auto da = discrete_asym_op(H, n, lambda, K, t, xlo, xhi - xlo + 1);
        double es = 0.0, ea = 0.0;
        for (long x = xlo; x <= xhi; ++x) {
            long idx = x * stride - lo;
            double d1 = ds.at(x) - csym[idx];
            double d2 = da.at(x) - casym[idx];
            es += d1 * d1;
            ea += d2 * d2;
        }
        rows.push_back({to_string(H.family()), gamma, n, es / n, ea / n});
    }
    return rows;
}

void write_convergence_csv(const std::string& path, const std::vector<ConvergenceRow>& rows, const std::string& hash) {
    CsvWriter w(path, {"family", "gamma", "n", "err_sym", "err_asym"}, hash);
    for (const auto& r : rows)
        w.row({r.family, format_double(r.gamma), std::to_string(r.n), format_double(r.err_sym), format_double(r.err_asym)});
    w.close();
}

} // namespace abc
