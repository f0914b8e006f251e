#include "abcsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "abcsim/errors.hpp"

namespace abc {

Dynamics::Dynamics(const KernelTables& tables, const RateModel& rates) : tables_(tables), rates_(rates) {
    rate_ = tables.theta_n * tables.lattice_size() * rates.r_max * (1.0 - tables.truncated_mass);
    inv_rmax_ = 1.0 / rates.r_max;
    uniform_rates_ = true;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (a != b && rates.rates[a][b] != rates.r_max) uniform_rates_ = false;
}

JumpProposal Dynamics::propose(const Configuration& c, Rng& rng) const {
    JumpProposal p;
    p.x = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(c.size())));
    p.z = tables_.sample_displacement(rng);
    int y = c.wrap(static_cast<long>(p.x) + p.z);
    p.accept_prob = c[p.x] == c[y] ? 0.0 : rates_.rates[c[p.x]][c[y]] * inv_rmax_;
    return p;
}

void Dynamics::step(Configuration& c, SimulationClock& clock, Rng& rng) const {
    double u = uniform01(rng);
    clock.macro_time += -std::log1p(-u) / rate_;
    ++clock.event_count;
    attempt(c, rng);
}

void Dynamics::evolve_to(Configuration& c, SimulationClock& clock, double t_target, Rng& rng,
                         std::vector<Observer>* observers) const {
    if (t_target < clock.macro_time) throw ParameterError("evolve_to: target time precedes the current time");

    // (time, observer, sample index)
    std::vector<std::tuple<double, std::size_t, std::size_t>> stops;
    if (observers) {
        for (std::size_t k = 0; k < observers->size(); ++k) {
            const auto& ts = (*observers)[k].times;
            for (std::size_t i = 0; i < ts.size(); ++i) {
                if (i > 0 && !(ts[i] >= ts[i - 1])) throw ParameterError("evolve_to: observer sample grid not sorted");
                if (ts[i] < clock.macro_time)
                    throw ParameterError("evolve_to: observer sample time precedes the current time");
                if (ts[i] <= t_target) stops.emplace_back(ts[i], k, i);
            }
        }
        std::stable_sort(stops.begin(), stops.end(),
                         [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
    }

    auto advance = [&](double tau) {
        double dt = tau - clock.macro_time;
        if (dt > 0.0) {
            std::poisson_distribution<std::uint64_t> pois(rate_ * dt);
            std::uint64_t count = pois(rng);
            for (std::uint64_t i = 0; i < count; ++i) attempt(c, rng);
            clock.event_count += count;
            clock.macro_time = tau;
        }
    };

    for (const auto& [tau, k, i] : stops) {
        advance(tau);
        (*observers)[k].callback(i, tau, c);
    }
    advance(t_target);
}

} // namespace abc
