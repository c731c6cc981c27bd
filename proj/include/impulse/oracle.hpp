#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "impulse/cumulative_lattice.hpp"
#include "impulse/markov_lattice.hpp"
#include "impulse/strategy.hpp"

namespace impulse::oracle {

// Exact optimum over all adapted strategies, by dynamic programming on the
// non-recombining history tree. The controller state carries the cumulative
// impulse, a pending-execution countdown and the number of impulses used, so
// the delayed size choice is represented explicitly: sizes are picked by an
// exact max when the countdown expires. Deliberately a different encoding
// from the solvers, so agreement is evidence rather than tautology.
double brute_force_tree_value(const MarkovLattice& model, const CumulativeLattice& lat,
                              const ImpulseMenu& menu, Mode mode, int max_impulses,
                              double theta = 1.0);

struct DeterministicSolution {
    double value = 0.0;
    std::vector<std::pair<double, int>> schedule;  // (decision time, menu item)
};

// Exhaustive search over decision schedules for single-state models. With
// discount_rate > 0 the payoff is the discounted one (costs discounted at the
// execution time) and mode must be risk-neutral.
DeterministicSolution enumerate_deterministic(const MarkovLattice& model,
                                              const CumulativeLattice& lat,
                                              const ImpulseMenu& menu, Mode mode,
                                              double theta = 1.0, double discount_rate = 0.0);

// Seeded random state-feedback rule; admissible by construction under the
// exact evaluators (spacing and horizon bookkeeping live in the semantics).
StrategyRule random_admissible_rule(const TimeGrid& grid, const ImpulseMenu& menu,
                                    const CumulativeLattice& lat, int n_states,
                                    std::uint64_t seed, bool stationary = false,
                                    int lattice_depth_cap = -1);

// Highest number of cost-charged impulses any admissible schedule can place
// on the grid, found by exhaustive extension (used to confirm the derived
// impulse budget is an upper bound).
int max_effective_impulses(const TimeGrid& grid);

}  // namespace impulse::oracle
