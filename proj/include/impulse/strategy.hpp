#pragma once

#include <cmath>
#include <vector>

#include "impulse/common.hpp"
#include "impulse/cumulative_lattice.hpp"
#include "impulse/markov_lattice.hpp"
#include "impulse/menu.hpp"
#include "impulse/time_grid.hpp"

namespace impulse {

enum class Mode { RiskNeutral, RiskSensitive };

// State-feedback intervention rule. For impulse k (1-based) with cumulative
// impulse id a: stop(k, a) flags the decision nodes (time x state) and
// size(k, a) holds the menu index chosen at the execution node. A stationary
// rule stores a single slab reused for every k. Decisions cease once one is
// taken later than steps - 2 * delay_steps (no further intervention can be
// both decided and executed with effect).
struct StrategyRule {
    int levels = 0;
    int steps = 0;
    int delay_steps = 0;
    bool stationary = false;
    // outer index: level k-1 (or 0 when stationary); inner: a_id
    std::vector<std::vector<Table<unsigned char>>> stop;
    std::vector<std::vector<Table<int>>> size;

    const Table<unsigned char>& stop_at(int k, int a_id) const {
        return stop[stationary ? 0 : k - 1][a_id];
    }
    const Table<int>& size_at(int k, int a_id) const {
        return size[stationary ? 0 : k - 1][a_id];
    }
    bool covers(int k, int a_id) const {
        const int slot = stationary ? 0 : k - 1;
        if (slot < 0 || slot >= static_cast<int>(stop.size())) return false;
        const auto& lvl = stop[slot];
        return a_id >= 0 && a_id < static_cast<int>(lvl.size()) && !lvl[a_id].empty();
    }
};

// One realised intervention: decided at decision_time, effective at
// execution_time = decision_time + delay, size picked from the menu.
struct TraceImpulse {
    double decision_time = 0.0;
    double execution_time = 0.0;
    int item = 0;
};

struct StrategyTrace {
    std::vector<TraceImpulse> impulses;
};

struct PayoffBreakdown {
    double reward_integral = 0.0;
    double charged_costs = 0.0;
    double total = 0.0;  // reward - costs, exponentiated in risk-sensitive mode
};

inline StrategyTrace make_trace(const TimeGrid& grid, const std::vector<std::pair<double, int>>& decisions) {
    StrategyTrace t;
    for (auto [time, item] : decisions)
        t.impulses.push_back({time, time + grid.delay, item});
    return t;
}

inline int time_to_index(const TimeGrid& grid, double t) {
    const double r = t / grid.dt;
    const double n = std::round(r);
    require(std::abs(r - n) <= 1e-9 * (1.0 + std::abs(n)), Errc::InadmissibleTrace,
            "decision time is not on the grid");
    return static_cast<int>(n);
}

// Admissibility: grid-aligned times in [0, T], min{T, tau_k + delay} <=
// tau_{k+1} <= T for consecutive impulses, and sizes drawn from the menu.
inline bool trace_admissible(const StrategyTrace& trace, const TimeGrid& grid,
                             const ImpulseMenu& menu, std::string* why = nullptr) {
    auto reject = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    double prev = -1.0;
    bool first = true;
    for (const auto& imp : trace.impulses) {
        const double r = imp.decision_time / grid.dt;
        if (std::abs(r - std::round(r)) > 1e-9 * (1.0 + std::abs(r)))
            return reject("decision time off the grid");
        if (imp.decision_time < -1e-12 || imp.decision_time > grid.horizon + 1e-12)
            return reject("decision time outside [0, T]");
        if (imp.item < 0 || imp.item >= menu.size()) return reject("size not in the menu");
        if (std::abs(imp.execution_time - (imp.decision_time + grid.delay)) > 1e-9)
            return reject("execution time is not decision + delay");
        if (!first) {
            const double earliest = std::min(grid.horizon, prev + grid.delay);
            if (imp.decision_time < earliest - 1e-12)
                return reject("decisions closer than the delay");
        }
        prev = imp.decision_time;
        first = false;
    }
    return true;
}

// Payoff of a trace along one realised state path (indices into the model's
// state set, length steps + 1). Left-endpoint sum of the running reward; the
// jump enters the integrand from the execution step onward; a cost is charged
// iff the decision falls strictly before T - delay.
inline PayoffBreakdown evaluate_controlled_payoff(const MarkovLattice& model,
                                                  const CumulativeLattice& lat,
                                                  const ImpulseMenu& menu,
                                                  const StrategyTrace& trace,
                                                  const std::vector<int>& state_path, Mode mode,
                                                  double theta = 1.0) {
    const TimeGrid& grid = model.grid;
    std::string why;
    require(trace_admissible(trace, grid, menu, &why), Errc::InadmissibleTrace, why);
    require(static_cast<int>(state_path.size()) == grid.steps + 1, Errc::InadmissibleTrace,
            "state path must cover the full grid");

    // execution index -> menu item, in impulse order
    std::vector<std::pair<int, int>> executions;
    PayoffBreakdown out;
    for (const auto& imp : trace.impulses) {
        const int i_dec = time_to_index(grid, imp.decision_time);
        const int i_exe = i_dec + grid.delay_steps;
        if (i_exe <= grid.steps - 1) executions.emplace_back(i_exe, imp.item);
        if (i_dec < grid.steps - grid.delay_steps) out.charged_costs += menu.costs[imp.item];
    }

    int a_id = 0;
    std::size_t next_exec = 0;
    for (int i = 0; i < grid.steps; ++i) {
        while (next_exec < executions.size() && executions[next_exec].first <= i) {
            const int child = lat.child_of(a_id, executions[next_exec].second);
            require(child != CumulativeLattice::kNoChild, Errc::InadmissibleTrace,
                    "trace uses more impulses than the cumulative lattice depth");
            a_id = child;
            ++next_exec;
        }
        out.reward_integral += model.reward_at(i, state_path[i], lat, a_id) * grid.dt;
    }
    const double net = out.reward_integral - out.charged_costs;
    out.total = (mode == Mode::RiskSensitive) ? std::exp(theta * net) : net;
    return out;
}

}  // namespace impulse
