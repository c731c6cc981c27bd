#pragma once

#include <cstdint>

#include "impulse/model_io.hpp"
#include "impulse/swing.hpp"

namespace impulse::fixtures {

// Built-in verification instances shared by the unit tests, the acceptance
// suite and the CLI verify subcommand.

// Single state at level 0, reward equal to the controlled level, one +1 item
// costing 0.1, horizon 1 with delay 0.4 on a 0.1 grid. Optimal value 0.6.
io::FiniteProblem d1();

// 3 states, 8 steps, delay 2 steps, 2 menu items, seeded kernels and reward
// table; small enough for the history-tree oracle.
io::FiniteProblem r3(std::uint64_t seed);

// Single-state discounted instance: level reward, +1 item costing 0.2,
// rate 1, delay 0.5. Closed form 0.8 e^{-1/2} / (1 - e^{-1/2}).
io::InfiniteProblem d2_infinite(double t_max_override = 0.0, double tail_epsilon = 1e-6);

// 3-state discounted instance with a seeded homogeneous kernel and a seeded
// reward table that is consistent across truncation horizons.
io::InfiniteProblem r3_infinite(std::uint64_t seed, double t_max_override = 0.0);

// Small swing instance on a binomial spot chain, two rights, layered strikes.
swing::SwingConfig swing_small_config();
swing::SwingProblem swing_small();

}  // namespace impulse::fixtures
