#include "abcsim/lattice.hpp"

#include "abcsim/errors.hpp"

namespace abc {

Configuration::Configuration(std::vector<std::uint8_t> species) : species_(std::move(species)) {
    for (auto s : species_) {
        if (s > 2) throw ParameterError("configuration: species code out of range");
        ++counts_[s];
    }
}

void Configuration::set(int x, int s) {
    --counts_[species_[x]];
    species_[x] = static_cast<std::uint8_t>(s);
    ++counts_[s];
}

std::uint64_t Configuration::state_index() const {
    if (size() > 20) throw ParameterError("state_index: lattice too large");
    std::uint64_t idx = 0;
    for (int x = size() - 1; x >= 0; --x) idx = idx * 3 + species_[x];
    return idx;
}

Configuration Configuration::from_state_index(std::uint64_t index, int L) {
    std::vector<std::uint8_t> s(L);
    for (int x = 0; x < L; ++x) {
        s[x] = static_cast<std::uint8_t>(index % 3);
        index /= 3;
    }
    return Configuration(std::move(s));
}

std::string Configuration::to_ascii() const {
    std::string out;
    out.reserve(species_.size() + 1);
    for (auto s : species_) out.push_back(species_char(s));
    out.push_back('\n');
    return out;
}

Configuration Configuration::from_ascii(const std::string& text) {
    std::vector<std::uint8_t> s;
    for (char ch : text) {
        if (ch == '\n' || ch == '\r') continue;
        if (ch < 'A' || ch > 'C') throw ParameterError(std::string("configuration dump: invalid character '") + ch + "'");
        s.push_back(static_cast<std::uint8_t>(ch - 'A'));
    }
    return Configuration(std::move(s));
}

bool Configuration::counts_consistent() const {
    std::array<long, 3> c{0, 0, 0};
    for (auto s : species_) ++c[s];
    return c == counts_;
}

Configuration sample_invariant(const std::array<double, 3>& rho, int L, Rng& rng) {
    std::vector<std::uint8_t> s(L);
    const double t0 = rho[0], t1 = rho[0] + rho[1];
    for (int x = 0; x < L; ++x) {
        double u = uniform01(rng);
        s[x] = u < t0 ? 0 : (u < t1 ? 1 : 2);
    }
    return Configuration(std::move(s));
}

BlockAverages block_average(const Configuration& c, int x, int l_block, int alpha, int beta,
                            const std::array<double, 3>& rho) {
    if (l_block < 1 || 4 * l_block > c.size())
        throw ParameterError("block_average: block length must satisfy 1 <= l <= L/4");
    BlockAverages b;
    b.x = x;
    b.l_block = l_block;
    double l = 0.0, r = 0.0;
    for (int j = 1; j <= l_block; ++j) {
        l += centered_indicator(c, c.wrap(static_cast<long>(x) - j), alpha, rho);
        r += centered_indicator(c, c.wrap(static_cast<long>(x) + j), beta, rho);
    }
    b.left = l / l_block;
    b.right = r / l_block;
    b.psi = b.left * b.right;
    return b;
}

void block_means(const std::vector<double>& g, int l, std::vector<double>& left, std::vector<double>& right) {
    const int L = static_cast<int>(g.size());
    if (l < 1 || 4 * l > L) throw ParameterError("block_means: block length must satisfy 1 <= l <= L/4");
    // prefix over the doubled array so windows never need modular arithmetic
    std::vector<double> pre(2 * L + 1, 0.0);
    for (int i = 0; i < 2 * L; ++i) pre[i + 1] = pre[i] + g[i % L];
    left.resize(L);
    right.resize(L);
    const double inv = 1.0 / l;
    for (int x = 0; x < L; ++x) {
        int xl = x + L; // sites x-l..x-1 → indices xl-l..xl-1 in the doubled array
        left[x] = (pre[xl] - pre[xl - l]) * inv;
        right[x] = (pre[x + 1 + l] - pre[x + 1]) * inv;
    }
}

} // namespace abc
