#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "impulse/cumulative_lattice.hpp"
#include "impulse/markov_lattice.hpp"
#include "impulse/menu.hpp"
#include "impulse/strategy.hpp"
#include "impulse/time_grid.hpp"

namespace impulse::lsmc {

// Regression Monte Carlo engine for path-space models: the conditional
// expectations of the risk-neutral scheme are replaced by least-squares
// projections on path features. Realised downstream sums are regressed
// wherever possible (the stop comparison and the continuation), fitted value
// surfaces only where a decision must be measurable at a future node (child
// values entering the obstacle and the size choice).

using RewardFn = std::function<double(double t, const Vec& x)>;

struct PathSpec {
    enum class Kind { Constant, Euler, Gbm, MarkovChain };
    Kind kind = Kind::Constant;
    int dim = 1;
    Vec x0;
    // Euler scheme with diagonal noise
    std::function<Vec(double t, const Vec&)> drift;
    std::function<Vec(double t, const Vec&)> vol;
    // exact per-coordinate geometric Brownian steps
    Vec gbm_mu, gbm_sigma;
    // sample the finite-state chain itself
    const MarkovLattice* chain = nullptr;
    bool antithetic = false;
};

struct PathEnsemble {
    int n_paths = 0;
    int n_times = 0;  // grid.steps + 1
    int dim = 0;
    std::uint64_t seed = 0;
    std::vector<double> data;    // [path][time][coord]
    std::vector<int> state_ids;  // MarkovChain kind only, [path][time]

    double x(int m, int i, int c) const {
        return data[(static_cast<std::size_t>(m) * n_times + i) * dim + c];
    }
    double& x(int m, int i, int c) {
        return data[(static_cast<std::size_t>(m) * n_times + i) * dim + c];
    }
    int state(int m, int i) const { return state_ids[static_cast<std::size_t>(m) * n_times + i]; }
};

PathEnsemble simulate_paths(const PathSpec& spec, const TimeGrid& grid, int n_paths,
                            std::uint64_t seed);

// CSV path files (columns path_id,i,x_1..x_l). Replayed files carry the
// caller's promise that they were generated without lookahead; nothing beyond
// the metamorphic feature test enforces it.
void write_path_file(const std::string& path, const PathEnsemble& ens);
PathEnsemble load_path_file(const std::string& path, const TimeGrid& grid);

struct RegressionBasis {
    enum class Kind { Polynomial, LatticeIndicator };
    Kind kind = Kind::Polynomial;
    int degree = 2;                    // per-coordinate powers, no cross terms
    bool include_running_reward = false;
    std::vector<Vec> lattice_states;   // LatticeIndicator anchors

    int n_features(int dim) const {
        const int base = kind == Kind::Polynomial ? 1 + dim * degree
                                                  : static_cast<int>(lattice_states.size());
        return base + (include_running_reward ? 1 : 0);
    }
};

struct Predictor {
    std::vector<double> coef;
    double condition = 0.0;
    bool ridge_fallback = false;

    double value(const std::vector<double>& phi) const {
        double v = 0.0;
        for (std::size_t b = 0; b < coef.size(); ++b) v += coef[b] * phi[b];
        return v;
    }
};

// Least squares of targets on the feature rows, ridge fallback on a singular
// normal system.
Predictor fit_least_squares(const Matrix& design, const std::vector<double>& targets,
                            double ridge_lambda);

// Feature rows for every path at time index i (uses path[0..i] only).
Matrix feature_matrix(const PathEnsemble& ens, const RegressionBasis& basis, int i,
                      const RewardFn& reward, const TimeGrid& grid);

// Spec-level convenience: project per-path targets known at index i_known
// onto the features at index i.
Predictor fit_conditional_expectation(const PathEnsemble& ens, const std::vector<double>& targets,
                                      const RegressionBasis& basis, int i, int i_known,
                                      const RewardFn& reward, const TimeGrid& grid,
                                      double ridge_lambda = 1e-10);

struct Config {
    RegressionBasis basis;
    double ridge_lambda = 1e-10;
    int max_impulses = -1;  // -1: the cumulative lattice depth; 0: plain mean of the reward
};

// Fitted rule: per impulse k the stop comparison pair over (a, i), plus the
// value fits of every lower level for size choices at execution nodes.
struct FittedRule {
    int levels = 0;
    int steps = 0, delay_steps = 0;
    std::uint64_t fit_seed = 0;
    RegressionBasis basis;
    // stop pair, outer k-1, then [a_id][i] (i < steps - delay_steps)
    std::vector<std::vector<std::vector<Predictor>>> obstacle_fit;
    std::vector<std::vector<std::vector<Predictor>>> continuation_fit;
    // value fits per solver level 0..levels-1: [n][a_id][i]
    std::vector<std::vector<std::vector<Predictor>>> value_fit;
};

struct SolveResult {
    double value_insample = 0.0;
    double stderr_insample = 0.0;
    FittedRule rule;
};

SolveResult lsmc_solve(const PathEnsemble& ens, const ImpulseMenu& menu, const TimeGrid& grid,
                       const CumulativeLattice& lat, const RewardFn& reward, const Config& cfg);

struct Evaluation {
    double mean = 0.0;
    double se = 0.0;
    double ci_low = 0.0, ci_high = 0.0;
    int n_paths = 0;
    bool seed_collision = false;
};

// Out-of-sample payoff of the fitted rule on an independent ensemble; a lower
// bound on the true optimum up to sampling noise.
Evaluation simulate_strategy_payoff(const FittedRule& rule, const PathEnsemble& fresh,
                                    const ImpulseMenu& menu, const TimeGrid& grid,
                                    const CumulativeLattice& lat, const RewardFn& reward);

}  // namespace impulse::lsmc
