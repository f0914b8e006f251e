#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "abcsim/kernel.hpp"
#include "abcsim/rng.hpp"

namespace abc {

// Species assignment on the periodic lattice {0, ..., L-1}.
class Configuration {
  public:
    Configuration() = default;
    explicit Configuration(std::vector<std::uint8_t> species);

    int size() const { return static_cast<int>(species_.size()); }
    int operator[](int x) const { return species_[x]; }
    const std::vector<std::uint8_t>& species() const { return species_; }
    const std::array<long, 3>& counts() const { return counts_; }

    // Torus index reduction.
    int wrap(long x) const {
        long L = size();
        long r = x % L;
        return static_cast<int>(r < 0 ? r + L : r);
    }

    void set(int x, int s);
    void exchange(int x, int y) {
        auto t = species_[x];
        species_[x] = species_[y];
        species_[y] = t;
    }

    // Index in base 3 (site x carries weight 3^x); only for L ≤ 20.
    std::uint64_t state_index() const;
    static Configuration from_state_index(std::uint64_t index, int L);

    std::string to_ascii() const;
    static Configuration from_ascii(const std::string& text);

    bool operator==(const Configuration& o) const { return species_ == o.species_; }

    // Checks that counts match the species array.
    bool counts_consistent() const;

  private:
    std::vector<std::uint8_t> species_;
    std::array<long, 3> counts_{0, 0, 0};
};

Configuration sample_invariant(const std::array<double, 3>& densities, int L, Rng& rng);

inline double centered_indicator(const Configuration& c, int x, int alpha, const std::array<double, 3>& rho) {
    return (c[x] == alpha ? 1.0 : 0.0) - rho[alpha];
}

struct BlockAverages {
    int x = 0;
    int l_block = 1;
    double left = 0.0;
    double right = 0.0;
    double psi = 0.0;
};

BlockAverages block_average(const Configuration& c, int x, int l_block, int alpha, int beta,
                            const std::array<double, 3>& rho);

// Left/right block averages of an arbitrary site field g at every site, via prefix sums:
// left[x] = (1/l) Σ_{j=1..l} g[x-j], right[x] = (1/l) Σ_{j=1..l} g[x+j].
void block_means(const std::vector<double>& g, int l_block, std::vector<double>& left, std::vector<double>& right);

} // namespace abc
