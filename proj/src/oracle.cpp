#include "impulse/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace impulse::oracle {

namespace {

// Value tables on the history tree, indexed [a][m][u]: cumulative impulse id,
// pending countdown (0 none, m >= 1 executes m steps ahead) and impulses used.
struct NodeTable {
    int A = 0, M = 0, U = 0;
    std::vector<double> v;
    NodeTable() = default;
    NodeTable(int a, int m, int u, double fill) : A(a), M(m), U(u), v(a * m * u, fill) {}
    double& at(int a, int m, int u) { return v[(a * M + m) * U + u]; }
    double at(int a, int m, int u) const { return v[(a * M + m) * U + u]; }
};

struct TreeSolver {
    const MarkovLattice& model;
    const CumulativeLattice& lat;
    const ImpulseMenu& menu;
    Mode mode;
    int max_impulses;
    double theta;
    int A, M, U, S, N, d;

    TreeSolver(const MarkovLattice& m, const CumulativeLattice& l, const ImpulseMenu& mn,
               Mode md, int maxi, double th)
        : model(m), lat(l), menu(mn), mode(md), max_impulses(maxi), theta(th) {
        S = model.n_states();
        N = model.grid.steps;
        d = model.grid.delay_steps;
        A = lat.size();
        M = std::max(1, d);  // stored countdowns: 0 .. d-1
        U = max_impulses + 1;
    }

    // value of executing the pending impulse on arrival at a node whose table
    // is already built
    double exec_resolve(const NodeTable& node, int a, int u) const {
        double best = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < menu.size(); ++j) {
            const int child = lat.child_of(a, j);
            if (child == CumulativeLattice::kNoChild) continue;
            const double down = node.at(child, 0, u);
            const double cand = mode == Mode::RiskNeutral
                                    ? -menu.costs[j] + down
                                    : std::exp(-theta * menu.costs[j]) * down;
            best = std::max(best, cand);
        }
        return best;
    }

    NodeTable visit(int i, int s) const {
        const double terminal = mode == Mode::RiskNeutral ? 0.0 : 1.0;
        if (i == N) return NodeTable(A, M, U, terminal);

        // children of the history node: one subtree per successor state
        const Matrix& P = model.kernel(i);
        std::vector<NodeTable> sub(S);
        std::vector<bool> used(S, false);
        for (int t = 0; t < S; ++t)
            if (P(s, t) > 0.0) {
                sub[t] = visit(i + 1, t);
                used[t] = true;
            }

        auto arrive = [&](int t, int a, int m_next, int u) {
            if (m_next >= 1) return sub[t].at(a, m_next, u);
            return exec_resolve(sub[t], a, u);
        };

        NodeTable out(A, M, U, 0.0);
        for (int a = 0; a < A; ++a) {
            const double g = model.reward_at(i, s, lat, a);
            for (int u = 0; u < U; ++u) {
                // no pending: choose between waiting and committing
                double wait = 0.0;
                for (int t = 0; t < S; ++t)
                    if (used[t]) wait += P(s, t) * sub[t].at(a, 0, u);
                double best = wait;
                if (u < max_impulses && i < N - d) {
                    double commit = 0.0;
                    for (int t = 0; t < S; ++t)
                        if (used[t]) commit += P(s, t) * arrive(t, a, d - 1, u + 1);
                    best = std::max(best, commit);
                }
                out.at(a, 0, u) = mode == Mode::RiskNeutral
                                      ? g * model.grid.dt + best
                                      : std::exp(theta * g * model.grid.dt) * best;

                for (int m = 1; m < M; ++m) {
                    double cont = 0.0;
                    for (int t = 0; t < S; ++t)
                        if (used[t]) cont += P(s, t) * arrive(t, a, m - 1, u);
                    out.at(a, m, u) = mode == Mode::RiskNeutral
                                          ? g * model.grid.dt + cont
                                          : std::exp(theta * g * model.grid.dt) * cont;
                }
            }
        }
        return out;
    }
};

}  // namespace

double brute_force_tree_value(const MarkovLattice& model, const CumulativeLattice& lat,
                              const ImpulseMenu& menu, Mode mode, int max_impulses,
                              double theta) {
    const int S = model.n_states();
    const int N = model.grid.steps;
    double nodes = 0.0, layer = 1.0;
    for (int i = 0; i < N; ++i) {
        layer *= S;
        nodes += layer;
    }
    require(nodes <= 1e6, Errc::TooLarge, "history tree beyond the enumeration budget");

    TreeSolver solver(model, lat, menu, mode, max_impulses, theta);
    const auto weights = model.initial_weights();
    double v = 0.0;
    for (int s = 0; s < S; ++s)
        if (weights[s] > 0.0) v += weights[s] * solver.visit(0, s).at(0, 0, 0);
    return v;
}

namespace {

double discounted_schedule_value(const MarkovLattice& model, const CumulativeLattice& lat,
                                 const ImpulseMenu& menu,
                                 const std::vector<std::pair<int, int>>& schedule, double r) {
    const TimeGrid& g = model.grid;
    double reward = 0.0;
    int a_id = 0;
    std::size_t next = 0;
    for (int i = 0; i < g.steps; ++i) {
        while (next < schedule.size() && schedule[next].first + g.delay_steps <= i) {
            a_id = lat.child_of(a_id, schedule[next].second);
            ++next;
        }
        // exact per-step discount weight: integral of e^{-rs} over the step
        const double w = (std::exp(-r * g.time(i)) - std::exp(-r * g.time(i + 1))) / r;
        reward += w * model.reward_at(i, 0, lat, a_id);
    }
    double costs = 0.0;
    for (auto [i_dec, item] : schedule)
        costs += std::exp(-r * g.time(i_dec + g.delay_steps)) * menu.costs[item];
    return reward - costs;
}

}  // namespace

DeterministicSolution enumerate_deterministic(const MarkovLattice& model,
                                              const CumulativeLattice& lat,
                                              const ImpulseMenu& menu, Mode mode, double theta,
                                              double discount_rate) {
    require(model.n_states() == 1, Errc::BadModel, "deterministic enumeration needs one state");
    require(discount_rate == 0.0 || mode == Mode::RiskNeutral, Errc::BadSpec,
            "discounted enumeration is risk-neutral only");
    const TimeGrid& g = model.grid;
    const std::vector<int> path(static_cast<std::size_t>(g.steps) + 1, 0);

    DeterministicSolution best;
    std::vector<std::pair<int, int>> schedule;

    auto value_of = [&]() {
        if (discount_rate > 0.0)
            return discounted_schedule_value(model, lat, menu, schedule, discount_rate);
        std::vector<std::pair<double, int>> decs;
        for (auto [i, j] : schedule) decs.emplace_back(g.time(i), j);
        return evaluate_controlled_payoff(model, lat, menu, make_trace(g, decs), path, mode,
                                          theta)
            .total;
    };

    // depth-first over schedules; earliest times and lowest items first, so
    // the first maximiser found is the canonical one
    auto extend = [&](auto&& self, int from_index) -> void {
        const double v = value_of();
        if (v > best.value) {
            best.value = v;
            best.schedule.clear();
            for (auto [i, j] : schedule) best.schedule.emplace_back(g.time(i), j);
        }
        if (static_cast<int>(schedule.size()) >= lat.max_depth()) return;
        // in the discounted (infinite-horizon) setting decisions may sit
        // anywhere on the grid; with a finite horizon only decisions strictly
        // before T - delay have any effect
        const int last = discount_rate > 0.0 ? g.steps - g.delay_steps
                                             : g.steps - g.delay_steps - 1;
        for (int i = from_index; i <= last; ++i)
            for (int j = 0; j < menu.size(); ++j) {
                schedule.emplace_back(i, j);
                self(self, i + g.delay_steps);
                schedule.pop_back();
            }
    };
    best.value = -std::numeric_limits<double>::infinity();
    extend(extend, 0);
    return best;
}

StrategyRule random_admissible_rule(const TimeGrid& grid, const ImpulseMenu& menu,
                                    const CumulativeLattice& lat, int n_states,
                                    std::uint64_t seed, bool stationary,
                                    int lattice_depth_cap) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> item(0, menu.size() - 1);
    const int cap = lattice_depth_cap >= 0 ? lattice_depth_cap : lat.max_depth();

    StrategyRule rule;
    rule.levels = stationary ? 1 : lat.max_depth();
    rule.steps = grid.steps;
    rule.delay_steps = grid.delay_steps;
    rule.stationary = stationary;
    const int n_levels = stationary ? 1 : rule.levels;
    rule.stop.resize(n_levels);
    rule.size.resize(n_levels);
    for (int k = 0; k < n_levels; ++k) {
        rule.stop[k].resize(lat.size());
        rule.size[k].resize(lat.size());
        const double q = 0.05 + 0.45 * unif(rng);
        for (int a = 0; a < lat.size(); ++a) {
            if (lat.depth(a) > cap) continue;
            Table<unsigned char> st(grid.steps + 1, n_states, 0);
            Table<int> sz(grid.steps + 1, n_states, 0);
            for (int i = 0; i <= grid.steps; ++i)
                for (int s = 0; s < n_states; ++s) {
                    st(i, s) = unif(rng) < q;
                    sz(i, s) = item(rng);
                }
            rule.stop[k][a] = std::move(st);
            rule.size[k][a] = std::move(sz);
        }
    }
    return rule;
}

int max_effective_impulses(const TimeGrid& grid) {
    // extend schedules of cost-charged decisions (strictly before T - delay)
    // with the mandatory spacing and count the longest
    int best = 0;
    auto extend = [&](auto&& self, int from, int count) -> void {
        best = std::max(best, count);
        for (int i = from; i < grid.steps - grid.delay_steps; ++i)
            self(self, i + grid.delay_steps, count + 1);
    };
    extend(extend, 0, 0);
    return best;
}

}  // namespace impulse::oracle
