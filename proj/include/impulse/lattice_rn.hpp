#pragma once

#include <vector>

#include "impulse/fields.hpp"
#include "impulse/markov_lattice.hpp"
#include "impulse/strategy.hpp"

namespace impulse::rn {

// Finite-horizon risk-neutral solver. The iteration computes, per level n,
// the value surface of the problem that allows at most n further impulses;
// level 0 is the no-intervention baseline. Backward Snell recursion per
// (level, cumulative impulse) slice:
//   Y_i = max(O_i, g(t_i, x + a) dt + P_i Y_{i+1}),  Y_N = 0,
// with the obstacle combining the reward earned over the delay window and the
// best post-impulse continuation one level down.

struct LevelDiagnostics {
    double restriction_gap = 0.0;   // max |Y - O| over the window i >= N - d
    double monotone_residual = 0.0; // min nodewise Y^n - Y^{n-1} (>= -eps expected)
};

struct SolveReport {
    std::vector<ValueField> values;     // levels 0..max
    std::vector<ObstacleField> obstacles;  // per level >= 1 (index 0 unused)
    double value = 0.0;                 // initial-distribution weighted Y^max at t = 0
    std::vector<double> level_values;   // same weighting per level
    std::vector<LevelDiagnostics> diagnostics;
    StrategyRule rule;
};

// Expected remaining reward when no further impulse is ever made, for every
// cumulative impulse in the lattice (level 0 of the iteration).
ValueField compute_y0(const MarkovLattice& model, const CumulativeLattice& lat);

// E[ sum of g over the delay window starting at i | state ] for one a.
Matrix compute_partial_reward(const MarkovLattice& model, const CumulativeLattice& lat, int a_id);

// Obstacle slice for level n at cumulative impulse a_id, reading the children
// of a_id in the previous level field.
Matrix compute_obstacle(const MarkovLattice& model, const CumulativeLattice& lat,
                        const ImpulseMenu& menu, int a_id, const ValueField& prev);

// Snell recursion against a precomputed obstacle slice.
Matrix solve_level(const MarkovLattice& model, const CumulativeLattice& lat, int a_id,
                   const Matrix& obstacle);

SolveReport solve(const MarkovLattice& model, const ImpulseMenu& menu,
                  const CumulativeLattice& lat);

// Stopping regions {Y = O} and execution-time size tables read off a report.
StrategyRule extract_strategy(const SolveReport& report, const MarkovLattice& model,
                              const CumulativeLattice& lat, const ImpulseMenu& menu);

// Exact expectation of the payoff under a rule by forward dynamic programming
// over (time, state, cumulative impulse, pending countdown, impulses used);
// independent of the value fields.
double evaluate_strategy_exact(const StrategyRule& rule, const MarkovLattice& model,
                               const CumulativeLattice& lat, const ImpulseMenu& menu);

}  // namespace impulse::rn
