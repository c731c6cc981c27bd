#pragma once

#include <cmath>

#include "impulse/common.hpp"

namespace impulse {

// Uniform time discretisation of [0, T] with an execution delay that is an
// exact multiple of the step. max_impulses is the largest number of
// interventions that fit before the horizon given the mandatory spacing.
struct TimeGrid {
    double horizon = 0.0;  // T
    double delay = 0.0;    // execution lag between decision and effect
    double dt = 0.0;
    int steps = 0;        // N, with N * dt == T
    int delay_steps = 0;  // d, with d * dt == delay
    int max_impulses = 0;

    double time(int i) const { return i * dt; }
    // Latest index at which a decision still incurs a cost / has an effect:
    // strictly before T - delay.
    int last_effective_index() const { return steps - delay_steps - 1; }
};

inline TimeGrid build_time_grid(double horizon, double delay, double dt) {
    require(dt > 0.0, Errc::NonCommensurate, "dt must be positive");
    require(horizon > delay && delay > 0.0, Errc::NonCommensurate,
            "need horizon > delay > 0");
    const double n_real = horizon / dt;
    const double d_real = delay / dt;
    const double n_round = std::round(n_real);
    const double d_round = std::round(d_real);
    require(std::abs(n_real - n_round) <= 1e-9 * (1.0 + n_round), Errc::NonCommensurate,
            "horizon is not an integer multiple of dt");
    require(std::abs(d_real - d_round) <= 1e-9 * (1.0 + d_round), Errc::NonCommensurate,
            "delay is not an integer multiple of dt");
    TimeGrid g;
    g.horizon = horizon;
    g.delay = delay;
    g.dt = dt;
    g.steps = static_cast<int>(n_round);
    g.delay_steps = static_cast<int>(d_round);
    require(g.steps >= 1, Errc::NonCommensurate, "need at least one step");
    require(g.delay_steps >= 1 && g.delay_steps < g.steps, Errc::NonCommensurate,
            "need 1 <= delay_steps < steps");
    // floor(T / delay) computed in exact integer arithmetic
    g.max_impulses = g.steps / g.delay_steps;
    return g;
}

}  // namespace impulse
