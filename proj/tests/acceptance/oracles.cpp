#include "oracles.hpp"

#include <boost/math/special_functions/zeta.hpp>
#include <cmath>

namespace oracle {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double c_gamma(double gamma) { return 0.5 / boost::math::zeta(1.0 + gamma); }

double theta(int n, double gamma) {
    if (gamma < 2.0) return std::pow(n, gamma);
    if (gamma == 2.0) return double(n) * n / std::log(double(n));
    return double(n) * n;
}

double rate(int a, int b, double K, const Energies& E) { return 1.0 + K * (E[a] - E[b]); }

Kernel::Kernel(double g, double asymmetry, int L_) : gamma(g), L(L_), half(L_ / 2) {
    const double c = c_gamma(g);
    c_plus = c * (1 + asymmetry);
    c_minus = c * (1 - asymmetry);
}

double Kernel::p(int z) const {
    if (z == 0 || std::abs(z) > half) return 0.0;
    return (z > 0 ? c_plus : c_minus) * std::pow(std::abs(z), -1.0 - gamma);
}

std::uint64_t pow3(int L) {
    std::uint64_t s = 1;
    for (int i = 0; i < L; ++i) s *= 3;
    return s;
}

std::uint64_t index_of(const State& s) {
    std::uint64_t idx = 0, w = 1;
    for (int v : s) {
        idx += w * v;
        w *= 3;
    }
    return idx;
}

State state_at(std::uint64_t index, int L) {
    State s(L);
    for (int x = 0; x < L; ++x) {
        s[x] = static_cast<int>(index % 3);
        index /= 3;
    }
    return s;
}

std::vector<double> generator(const Kernel& k, double K, const Energies& E, double theta_n) {
    const int L = k.L;
    const std::uint64_t S = pow3(L);
    std::vector<double> Q(S * S, 0.0);
    for (std::uint64_t i = 0; i < S; ++i) {
        State s = state_at(i, L);
        double out = 0.0;
        for (int x = 0; x < L; ++x)
            for (int z = -k.half; z <= k.half; ++z) {
                if (z == 0) continue;
                const int y = ((x + z) % L + L) % L;
                if (s[x] == s[y]) continue;
                const double r = theta_n * k.p(z) * rate(s[x], s[y], K, E);
                State t = s;
                std::swap(t[x], t[y]);
                Q[i * S + index_of(t)] += r;
                out += r;
            }
        Q[i * S + i] -= out;
    }
    return Q;
}

std::vector<double> product_measure(const Densities& rho, int L) {
    const std::uint64_t S = pow3(L);
    std::vector<double> pi(S);
    for (std::uint64_t i = 0; i < S; ++i) {
        double w = 1.0;
        for (int v : state_at(i, L)) w *= rho[v];
        pi[i] = w;
    }
    return pi;
}

double stationarity_residual(const std::vector<double>& Q, const std::vector<double>& pi) {
    const std::size_t S = pi.size();
    double worst = 0.0;
    for (std::size_t j = 0; j < S; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < S; ++i) s += pi[i] * Q[i * S + j];
        worst = std::max(worst, std::abs(s));
    }
    return worst;
}

std::vector<double> transient(const std::vector<double>& Q, const std::vector<double>& p0, double t) {
    const std::size_t S = p0.size();
    std::vector<double> term = p0, sum = p0, next(S);
    for (int k = 1; k < 200; ++k) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < S; ++i) {
            if (term[i] == 0.0) continue;
            for (std::size_t j = 0; j < S; ++j) next[j] += term[i] * Q[i * S + j];
        }
        double mag = 0.0;
        for (std::size_t j = 0; j < S; ++j) {
            term[j] = next[j] * t / k;
            sum[j] += term[j];
            mag = std::max(mag, std::abs(term[j]));
        }
        if (mag < 1e-18) break;
    }
    return sum;
}

double apply_direct(const Kernel& k, double K, const Energies& E, const State& eta,
                    const std::function<double(const State&)>& f) {
    const int L = k.L;
    const double f0 = f(eta);
    double s = 0.0;
    for (int x = 0; x < L; ++x)
        for (int z = -k.half; z <= k.half; ++z) {
            if (z == 0) continue;
            const int y = ((x + z) % L + L) % L;
            State t = eta;
            std::swap(t[x], t[y]);
            s += k.p(z) * rate(eta[x], eta[y], K, E) * (f(t) - f0);
        }
    return s;
}

double pair_expectation(const Densities& rho, const std::array<double, 3>& g, double K, const Energies& E) {
    double s = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            if (a == b) continue;
            const double d = g[b] - g[a];
            s += rho[a] * rho[b] * d * d * rate(a, b, K, E);
        }
    return s;
}

double normal_field(const State& eta, const std::function<double(double)>& H, int n, double d1, double d2,
                    const Densities& rho) {
    const int L = static_cast<int>(eta.size());
    double s = 0.0;
    for (int x = 0; x < L; ++x) {
        const int xt = x < L / 2 ? x : x - L;
        const double f = d1 * ((eta[x] == 0) - rho[0]) + d2 * ((eta[x] == 1) - rho[1]);
        s += H(double(xt) / n) * f;
    }
    return s / std::sqrt(double(n));
}

double ou_covariance(const Kernel& k, int n, double theta_n, double lambda, double K, double m_n, double d3,
                     const std::vector<double>& h, double t) {
    const int M = static_cast<int>(h.size());
    std::vector<double> c(M), sn(M);
    for (int j = 0; j < M; ++j) {
        c[j] = std::cos(2 * kPi * j / M);
        sn[j] = std::sin(2 * kPi * j / M);
    }
    const double pre = 2 * lambda * K / 3;
    double total = 0.0;
    for (int j = 0; j < M; ++j) {
        std::complex<double> hj = 0.0;
        for (int x = 0; x < M; ++x) {
            const int q = static_cast<int>((static_cast<long long>(x) * j) % M);
            hj += h[x] * std::complex<double>(c[q], -sn[q]);
        }
        double sym = 0.0, asym = 0.0;
        for (int d = 1; d <= k.half; ++d) {
            const int q = static_cast<int>((static_cast<long long>(d) * j) % M);
            sym += k.s(d) * (2 * c[q] - 2);
            asym += k.a(d) * 2 * sn[q];
        }
        const double th = (M % 2 == 0 && j == M / 2) ? 0.0 : 2 * kPi * (j <= M / 2 ? j : j - M) / M;
        const std::complex<double> A(2 * theta_n * sym, -pre * (theta_n * asym - m_n * th));
        total += std::real(std::norm(hj) * std::exp(t * A));
    }
    return d3 * total / M / n;
}

double seminorm_gamma1_gaussian() { return 2 * kPi * c_gamma(1.0); }

} // namespace oracle
