#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "impulse/common.hpp"
#include "impulse/cumulative_lattice.hpp"
#include "impulse/menu.hpp"
#include "impulse/time_grid.hpp"

namespace impulse {

// Instantaneous reward evaluated at a shifted state. Either a closed-form
// callable of (t, x + a) or an explicit table indexed by (time, state,
// cumulative-impulse id); the table form exists for models whose reward has
// no functional expression.
struct Reward {
    // callable form: g(t, x) with x already shifted by the cumulative impulse
    std::function<double(double t, const Vec& x)> fn;
    // table form: g[time][state][a_id], sized steps x n_states x lattice size
    std::vector<std::vector<std::vector<double>>> table;

    bool is_table() const { return !table.empty(); }
};

// Finite-state discrete-time model of the uncontrolled process: a fixed state
// set with one row-stochastic transition kernel per time step. The kernel
// list may hold a single matrix, reused for every step.
class MarkovLattice {
  public:
    TimeGrid grid;
    std::vector<Vec> states;       // S state vectors in R^dim
    std::vector<Matrix> kernels;   // 1 (homogeneous) or grid.steps matrices
    Reward reward;
    double gamma_bound = 0.0;          // declared bound on |g| over reachable shifts
    std::vector<double> initial_dist;  // weight per state at time 0

    int n_states() const { return static_cast<int>(states.size()); }
    int dim() const { return states.empty() ? 0 : static_cast<int>(states[0].size()); }

    const Matrix& kernel(int i) const {
        return kernels.size() == 1 ? kernels[0] : kernels[static_cast<std::size_t>(i)];
    }

    // g(t_i, x_s + a) where a is lattice value a_id.
    double reward_at(int i, int s, const CumulativeLattice& lat, int a_id) const {
        if (reward.is_table()) return reward.table[i][s][a_id];
        const Vec& a = lat.value(a_id);
        Vec x = states[s];
        for (std::size_t c = 0; c < x.size(); ++c) x[c] += a[c];
        return reward.fn(grid.time(i), x);
    }

    void validate(const CumulativeLattice& lat) const {
        require(!states.empty(), Errc::BadModel, "model needs at least one state");
        require(!kernels.empty(), Errc::BadModel, "model needs a transition kernel");
        require(kernels.size() == 1 || static_cast<int>(kernels.size()) >= grid.steps,
                Errc::BadModel, "need one kernel or one per time step");
        const std::size_t S = states.size();
        for (const auto& st : states)
            require(st.size() == states[0].size(), Errc::BadModel, "states of mixed dimension");
        for (const auto& k : kernels) {
            require(k.rows() == S && k.cols() == S, Errc::BadModel, "kernel shape mismatch");
            for (std::size_t r = 0; r < S; ++r) {
                double sum = 0.0;
                for (std::size_t c = 0; c < S; ++c) {
                    require(k(r, c) >= 0.0, Errc::BadModel, "negative kernel entry");
                    sum += k(r, c);
                }
                require(std::abs(sum - 1.0) <= 1e-12, Errc::BadModel,
                        "kernel row does not sum to 1");
            }
        }
        if (!initial_dist.empty()) {
            require(initial_dist.size() == S, Errc::BadModel, "initial distribution size mismatch");
            double sum = 0.0;
            for (double w : initial_dist) {
                require(w >= 0.0, Errc::BadModel, "negative initial weight");
                sum += w;
            }
            require(std::abs(sum - 1.0) <= 1e-9, Errc::BadModel,
                    "initial distribution does not sum to 1");
        }
        if (reward.is_table()) {
            require(static_cast<int>(reward.table.size()) >= grid.steps, Errc::BadModel,
                    "reward table too short in time");
            for (const auto& per_state : reward.table) {
                require(per_state.size() == S, Errc::BadModel, "reward table state mismatch");
                for (const auto& per_a : per_state)
                    require(static_cast<int>(per_a.size()) >= lat.size(), Errc::BadModel,
                            "reward table does not cover the cumulative lattice");
            }
        } else {
            require(static_cast<bool>(reward.fn), Errc::BadModel, "reward callable missing");
        }
        require(gamma_bound >= 0.0, Errc::BadModel, "gamma bound must be nonnegative");
        for (int i = 0; i < grid.steps; ++i)
            for (int s = 0; s < static_cast<int>(S); ++s)
                for (int a = 0; a < lat.size(); ++a)
                    require(std::abs(reward_at(i, s, lat, a)) <= gamma_bound + 1e-12,
                            Errc::BadModel, "reward exceeds the declared gamma bound");
    }

    std::vector<double> initial_weights() const {
        if (!initial_dist.empty()) return initial_dist;
        std::vector<double> w(states.size(), 0.0);
        w[0] = 1.0;
        return w;
    }
};

}  // namespace impulse
