#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "abcsim/kernel.hpp"
#include "abcsim/lattice.hpp"
#include "abcsim/rng.hpp"

namespace abc {

struct SimulationClock {
    double macro_time = 0.0;
    std::uint64_t event_count = 0; // proposals, including rejected and same-species ones
};

struct JumpProposal {
    int x = 0;
    int z = 0;
    double accept_prob = 1.0;
};

// Sampled at each of `times` (sorted, ascending) with the state at that time.
struct Observer {
    std::vector<double> times;
    std::function<void(std::size_t index, double t, const Configuration& c)> callback;
};

// Thinned jump chain for the generator Θ(n) Σ p(y-x) r_{x,y} [f(η^{xy}) - f(η)]
// with the kernel truncated to |z| ≤ L/2.
class Dynamics {
  public:
    Dynamics(const KernelTables& tables, const RateModel& rates);

    // Total proposal rate Θ(n)·L·r_max·(1 − truncated mass).
    double attempt_rate() const { return rate_; }
    const KernelTables& tables() const { return tables_; }
    const RateModel& rates() const { return rates_; }

    // One proposal at the current state; returns true if an exchange happened.
    bool attempt(Configuration& c, Rng& rng) const {
        const int L = c.size();
        const int x = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(L)));
        const int z = tables_.sample_displacement(rng);
        int y = x + z;
        if (y >= L)
            y -= L;
        else if (y < 0)
            y += L;
        const int sx = c[x], sy = c[y];
        if (sx == sy) return false;
        if (!uniform_rates_) {
            const double acc = rates_.rates[sx][sy] * inv_rmax_;
            if (acc < 1.0 && uniform01(rng) >= acc) return false;
        }
        c.exchange(x, y);
        return true;
    }

    JumpProposal propose(const Configuration& c, Rng& rng) const;

    // Advances the clock by one Exp(attempt_rate) spacing and makes one proposal.
    void step(Configuration& c, SimulationClock& clock, Rng& rng) const;

    // Runs to t_target. Proposal counts between consecutive stop times are
    // Poisson(rate·Δt), which has the same law as exponential spacings.
    void evolve_to(Configuration& c, SimulationClock& clock, double t_target, Rng& rng,
                   std::vector<Observer>* observers = nullptr) const;

  private:
    const KernelTables& tables_;
    RateModel rates_;
    double rate_ = 0.0;
    double inv_rmax_ = 1.0;
    bool uniform_rates_ = false;
};

} // namespace abc
