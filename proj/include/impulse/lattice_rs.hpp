#pragma once

#include <vector>

#include "impulse/fields.hpp"
#include "impulse/markov_lattice.hpp"
#include "impulse/strategy.hpp"

namespace impulse::rs {

// Finite-horizon risk-sensitive solver: exponential utility of the net
// cumulative reward, theta > 0. The recursion is the multiplicative analogue
// of the risk-neutral Snell scheme,
//   Y_i = max(O_i, exp(theta g dt) P_i Y_{i+1}),  Y_N = 1,
// derived by dividing the Snell recursion of the exp-weighted process by the
// common positive factor exp(theta * integral of g up to t_i). When the
// exponent budget theta (gamma_bound T + max cost) is large, every surface is
// computed and stored in log space; comparisons are unchanged because log is
// increasing.

enum class LogSpacePolicy { Auto, Never, Always };

struct LevelDiagnostics {
    double restriction_gap = 0.0;
    double monotone_residual = 0.0;  // min nodewise Y^n - Y^{n-1} (stored scale)
};

struct SolveReport {
    bool log_space = false;
    double theta = 1.0;
    std::vector<ValueField> values;  // stored linear, or log when log_space
    std::vector<ObstacleField> obstacles;
    double value = 0.0;  // always linear
    std::vector<double> level_values;
    std::vector<LevelDiagnostics> diagnostics;
    StrategyRule rule;
};

// exp-threshold above which Auto switches to log space
constexpr double kLogSpaceThreshold = 30.0;
// hard cap for linear-mode exponents; beyond this Never-mode refuses
constexpr double kOverflowCap = 700.0;

ValueField compute_y0(const MarkovLattice& model, const CumulativeLattice& lat, double theta,
                      bool log_space);

Matrix compute_obstacle(const MarkovLattice& model, const CumulativeLattice& lat,
                        const ImpulseMenu& menu, int a_id, const ValueField& prev, double theta,
                        bool log_space);

Matrix solve_level(const MarkovLattice& model, const CumulativeLattice& lat, int a_id,
                   const Matrix& obstacle, double theta, bool log_space);

SolveReport solve(const MarkovLattice& model, const ImpulseMenu& menu,
                  const CumulativeLattice& lat, double theta = 1.0,
                  LogSpacePolicy policy = LogSpacePolicy::Auto);

StrategyRule extract_strategy(const SolveReport& report, const MarkovLattice& model,
                              const CumulativeLattice& lat, const ImpulseMenu& menu);

// E[exp(theta (integral of g - charged costs))] under the rule, by the same
// state-space DP as the risk-neutral evaluator with multiplicative weights.
double evaluate_strategy_exact(const StrategyRule& rule, const MarkovLattice& model,
                               const CumulativeLattice& lat, const ImpulseMenu& menu,
                               double theta = 1.0, bool log_space = false);

}  // namespace impulse::rs
