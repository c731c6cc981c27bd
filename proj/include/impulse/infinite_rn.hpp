#pragma once

#include <cmath>
#include <vector>

#include "impulse/fields.hpp"
#include "impulse/markov_lattice.hpp"
#include "impulse/strategy.hpp"

namespace impulse::inf {

// Infinite-horizon discounted risk-neutral solver on a certified truncation
// of the time axis. Values are discounted to time zero: the running reward
// enters as g(t_i, .) times the exact step weight (the integral of e^{-rs}
// over the step) and costs are discounted at the execution time,
// e^{-r(tau + delay)} psi. The level iteration is monotone and stops when the
// sup-norm increment falls below epsilon_fix.

struct TruncationCertificate {
    double t_trunc = 0.0;
    double tail_bound = 0.0;  // gamma_bound e^{-r t_trunc} / r
    double epsilon_target = 0.0;
};

// Smallest grid-aligned horizon whose discounted tail is below epsilon.
TruncationCertificate choose_truncation(double rate, double gamma_bound, double epsilon,
                                        double dt, double delay);

// integral of e^{-rs} over [t, t + dt]
inline double step_weight(double rate, double t, double dt) {
    return (std::exp(-rate * t) - std::exp(-rate * (t + dt))) / rate;
}

struct IterationSettings {
    double rate = 0.0;
    double epsilon_fix = 1e-8;
    int n_max = 0;      // 0: use 10 * ceil(t_trunc / delay)
    int depth_cap = 0;  // 0: use ceil(t_trunc / delay)
};

struct FixedPointReport {
    TruncationCertificate certificate;
    double rate = 0.0;
    int depth_cap = 0;
    int iterations = 0;
    std::vector<double> residuals;      // sup-node increment per level
    double monotone_violation = 0.0;    // most negative nodewise increment
    long beyond_cap_reads = 0;          // children read as zero past the cap
    ValueField y0;
    ValueField limit;
    ObstacleField obstacle;
    StrategyRule rule;
    double value = 0.0;
};

// The cumulative lattice for this module must be built with depth
// depth_cap + 1, so that every child of a capped value has an id; fields are
// only materialised up to depth_cap and deeper reads count as zero.
ValueField compute_y0(const MarkovLattice& model, const CumulativeLattice& lat, double rate,
                      int depth_cap);

Matrix inf_obstacle(const MarkovLattice& model, const CumulativeLattice& lat,
                    const ImpulseMenu& menu, int a_id, const ValueField& prev, double rate,
                    int depth_cap, long* beyond_cap_reads = nullptr);

Matrix inf_solve_level(const MarkovLattice& model, const CumulativeLattice& lat, int a_id,
                       const Matrix& obstacle, double rate);

FixedPointReport inf_iterate(const MarkovLattice& model, const ImpulseMenu& menu,
                             const CumulativeLattice& lat,
                             const TruncationCertificate& certificate,
                             const IterationSettings& settings);

// Discounted payoff of a stationary rule by forward dynamic programming on
// the truncated grid; no reuse of the value fields.
double evaluate_strategy(const StrategyRule& rule, const MarkovLattice& model,
                         const CumulativeLattice& lat, const ImpulseMenu& menu, double rate);

}  // namespace impulse::inf
