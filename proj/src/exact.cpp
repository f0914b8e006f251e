#include "abcsim/exact.hpp"

#include <cmath>

#include "abcsim/errors.hpp"

namespace abc {

namespace {

int pow3(int L) {
    int s = 1;
    for (int i = 0; i < L; ++i) s *= 3;
    return s;
}

double xi(const Configuration& c, int x, int alpha) { return c[x] == alpha ? 1.0 : 0.0; }

} // namespace

DenseMatrix exact_generator(const KernelTables& t, const RateModel& r) {
    const int L = t.lattice_size();
    if (L > kMaxExactSites) throw ParameterError("exact_generator: at most 7 sites (3^7 states)");
    const int S = pow3(L);
    const int half = t.half();
    DenseMatrix Q(S, S);
    for (int i = 0; i < S; ++i) {
        Configuration c = Configuration::from_state_index(static_cast<std::uint64_t>(i), L);
        double out = 0.0;
        for (int x = 0; x < L; ++x)
            for (int d = 1; d <= half; ++d)
                for (int z : {d, -d}) {
                    int y = c.wrap(static_cast<long>(x) + z);
                    if (c[x] == c[y]) continue;
                    double rate = t.theta_n * t.p(z) * r(c[x], c[y]);
                    Configuration e = c;
                    e.exchange(x, y);
                    Q(i, static_cast<int>(e.state_index())) += rate;
                    out += rate;
                }
        Q(i, i) -= out;
    }
    return Q;
}

std::vector<double> product_measure(const std::array<double, 3>& rho, int L) {
    const int S = pow3(L);
    std::vector<double> pi(S);
    for (int i = 0; i < S; ++i) {
        int k = i;
        double w = 1.0;
        for (int x = 0; x < L; ++x) {
            w *= rho[k % 3];
            k /= 3;
        }
        pi[i] = w;
    }
    return pi;
}

std::vector<double> apply_generator(const DenseMatrix& Q, const std::vector<double>& f) {
    std::vector<double> g(Q.rows, 0.0);
    for (int i = 0; i < Q.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < Q.cols; ++j) s += Q(i, j) * f[j];
        g[i] = s;
    }
    return g;
}

double stationarity_residual(const DenseMatrix& Q, const std::vector<double>& pi) {
    std::vector<double> v(Q.cols, 0.0);
    for (int i = 0; i < Q.rows; ++i)
        if (pi[i] != 0.0)
            for (int j = 0; j < Q.cols; ++j) v[j] += pi[i] * Q(i, j);
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double verify_stationarity(const ModelParams& params, int l_small, const RateModel* rates_override) {
    ModelParams p = params;
    p.lattice_size = l_small;
    KernelTables t(p);
    RateModel r = rates_override ? *rates_override : RateModel::from_params(p);
    DenseMatrix Q = exact_generator(t, r);
    return stationarity_residual(Q, product_measure(p.densities, l_small));
}

std::vector<double> transient_distribution(const DenseMatrix& Q, const std::vector<double>& p0, double t) {
    double lam = 0.0;
    for (int i = 0; i < Q.rows; ++i) lam = std::max(lam, -Q(i, i));
    std::vector<double> out(p0.size(), 0.0);
    if (lam == 0.0 || t == 0.0) return p0;
    lam *= 1.05;
    const double mu = lam * t;
    // P = I + Q/λ
    std::vector<double> v = p0, next(p0.size());
    double w = std::exp(-mu), acc = 0.0;
    const int kmax = static_cast<int>(mu + 20.0 * std::sqrt(mu) + 60.0);
    for (int k = 0; k <= kmax; ++k) {
        for (std::size_t j = 0; j < v.size(); ++j) out[j] += w * v[j];
        acc += w;
        if (1.0 - acc < 1e-15) break;
        for (int j = 0; j < Q.cols; ++j) next[j] = v[j];
        for (int i = 0; i < Q.rows; ++i) {
            if (v[i] == 0.0) continue;
            const double vi = v[i] / lam;
            for (int j = 0; j < Q.cols; ++j) next[j] += vi * Q(i, j);
        }
        v.swap(next);
        w *= mu / (k + 1);
    }
    if (1.0 - acc > 1e-12) throw NumericalError("transient_distribution: Poisson weights did not converge");
    return out;
}

double generator_on_indicator(const Configuration& c, int z, int alpha, const KernelTables& t, const RateModel& r) {
    if (alpha != A && alpha != B) throw ParameterError("generator_on_indicator: alpha must be A or B");
    const int be = alpha == A ? B : A;
    const int a = alpha;
    const double xz_a = xi(c, z, a), xz_b = xi(c, z, be);
    double v = 0.0;
    for (int d = 1; d <= t.half(); ++d)
        for (int s : {d, -d}) {
            // p(z−y) with y = z − s, and p(y−z) with y = z + s
            const int y1 = c.wrap(static_cast<long>(z) - s);
            const int y2 = c.wrap(static_cast<long>(z) + s);
            const double p = t.p(s);
            const double ya1 = xi(c, y1, a), yb1 = xi(c, y1, be);
            const double ya2 = xi(c, y2, a), yb2 = xi(c, y2, be);
            v += p * (r(a, C) * ya1 - r(C, a) * xz_a);
            v += p * (r(C, a) * ya2 - r(a, C) * xz_a);
            v += p * ((r(C, a) - r(a, C)) * ya1 * xz_a + (r(a, be) - r(a, C)) * ya1 * xz_b +
                      (r(C, a) - r(be, a)) * xz_a * yb1);
            v += p * ((r(a, C) - r(C, a)) * ya2 * xz_a + (r(be, a) - r(C, a)) * ya2 * xz_b +
                      (r(a, C) - r(a, be)) * xz_a * yb2);
        }
    return v;
}

double indicator_times_generator(const Configuration& c, int z, int mult, int alpha, const KernelTables& t,
                                 const RateModel& r) {
    if ((alpha != A && alpha != B) || (mult != A && mult != B))
        throw ParameterError("indicator_times_generator: species must be A or B");
    const int a = alpha;
    const int be = alpha == A ? B : A;
    double v = 0.0;
    for (int d = 1; d <= t.half(); ++d)
        for (int s : {d, -d}) {
            const int w1 = c.wrap(static_cast<long>(z) - s); // p(z−w)
            const int w2 = c.wrap(static_cast<long>(z) + s); // p(w−z)
            const double p = t.p(s);
            if (mult == alpha) {
                const double xa = xi(c, z, a);
                v += -xa * p * (r(C, a) + r(a, C));
                v += p * (r(C, a) * xi(c, w1, a) + r(a, C) * xi(c, w2, a)) * xa;
                v += p * ((r(C, a) - r(be, a)) * xi(c, w1, be) + (r(a, C) - r(a, be)) * xi(c, w2, be)) * xa;
            } else {
                v += p * (r(a, be) * xi(c, w1, a) + r(be, a) * xi(c, w2, a)) * xi(c, z, be);
            }
        }
    return v;
}

double pair_expectation(const std::array<double, 3>& rho, double d1, double d2, const RateModel& r) {
    double g[3];
    for (int s = 0; s < 3; ++s) g[s] = d1 * ((s == A) - rho[A]) + d2 * ((s == B) - rho[B]);
    double e = 0.0;
    for (int az = 0; az < 3; ++az)
        for (int aw = 0; aw < 3; ++aw) {
            if (az == aw) continue;
            const double diff = g[aw] - g[az];
            e += rho[az] * rho[aw] * diff * diff * r(az, aw);
        }
    return e;
}

} // namespace abc
