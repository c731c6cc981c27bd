#include "impulse/lattice_rs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace impulse::rs {

namespace {

// one backward step of the multiplicative recursion: out = factor .* (P next)
// (linear) or out = theta_g_dt + logsumexp(P, next) (log space)
void step_back(const Matrix& P, const std::vector<double>& next, const std::vector<double>& gdt,
               double theta, bool log_space, std::vector<double>& out) {
    const int S = static_cast<int>(P.rows());
    static thread_local std::vector<double> tmp;
    if (log_space) {
        kernel_apply_log(P, next, tmp);
        out.resize(S);
        for (int s = 0; s < S; ++s) out[s] = theta * gdt[s] + tmp[s];
    } else {
        kernel_apply(P, next, tmp);
        out.resize(S);
        for (int s = 0; s < S; ++s) out[s] = std::exp(theta * gdt[s]) * tmp[s];
    }
}

void reward_row(const MarkovLattice& model, const CumulativeLattice& lat, int a_id, int i,
                std::vector<double>& out) {
    const int S = model.n_states();
    out.resize(S);
    for (int s = 0; s < S; ++s) out[s] = model.reward_at(i, s, lat, a_id) * model.grid.dt;
}

double exponent_budget(const MarkovLattice& model, const ImpulseMenu& menu, double theta) {
    return theta * (model.gamma_bound * model.grid.horizon + menu.max_cost());
}

}  // namespace

ValueField compute_y0(const MarkovLattice& model, const CumulativeLattice& lat, double theta,
                      bool log_space) {
    const TimeGrid& g = model.grid;
    const int S = model.n_states();
    const double one = log_space ? 0.0 : 1.0;
    ValueField field(0, lat.size());
    std::vector<double> gdt, next, cur;
    for (int a = 0; a < lat.size(); ++a) {
        Matrix y(g.steps + 1, S, one);
        next.assign(S, one);
        for (int i = g.steps - 1; i >= 0; --i) {
            reward_row(model, lat, a, i, gdt);
            step_back(model.kernel(i), next, gdt, theta, log_space, cur);
            for (int s = 0; s < S; ++s) {
                require(log_space || (cur[s] > 0.0 && std::isfinite(cur[s])), Errc::Overflow,
                        "accumulated exponent left (0, inf); rerun in log space");
                y(i, s) = cur[s];
                next[s] = cur[s];
            }
        }
        field.at(a) = std::move(y);
    }
    return field;
}

Matrix compute_obstacle(const MarkovLattice& model, const CumulativeLattice& lat,
                        const ImpulseMenu& menu, int a_id, const ValueField& prev, double theta,
                        bool log_space) {
    const TimeGrid& g = model.grid;
    const int S = model.n_states();
    const int d = g.delay_steps;
    const double one = log_space ? 0.0 : 1.0;

    std::vector<int> children(menu.size());
    for (int j = 0; j < menu.size(); ++j) {
        children[j] = lat.child_of(a_id, j);
        require(children[j] != CumulativeLattice::kNoChild, Errc::MissingChild,
                "obstacle needs a child beyond the lattice depth");
        require(prev.has(children[j]), Errc::MissingChild,
                "previous level does not cover a child; levels out of order");
    }

    Matrix out(g.steps + 1, S, one);
    std::vector<double> w, gdt;
    for (int i = g.steps; i >= 0; --i) {
        const int end = std::min(i + d, g.steps);
        if (i < g.steps - d) {
            // best post-impulse continuation; the positive common factor
            // exp(theta integral of g over the window) sits outside the max
            w.resize(S);
            for (int s = 0; s < S; ++s) {
                double best = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < menu.size(); ++j) {
                    const double down = prev.at(children[j])(i + d, s);
                    const double cand = log_space ? -theta * menu.costs[j] + down
                                                  : std::exp(-theta * menu.costs[j]) * down;
                    best = std::max(best, cand);
                }
                w[s] = best;
            }
        } else {
            w.assign(S, one);
        }
        for (int j = end - 1; j >= i; --j) {
            reward_row(model, lat, a_id, j, gdt);
            std::vector<double> nxt;
            step_back(model.kernel(j), w, gdt, theta, log_space, nxt);
            w = std::move(nxt);
        }
        for (int s = 0; s < S; ++s) out(i, s) = w[s];
    }
    return out;
}

Matrix solve_level(const MarkovLattice& model, const CumulativeLattice& lat, int a_id,
                   const Matrix& obstacle, double theta, bool log_space) {
    const TimeGrid& g = model.grid;
    const int S = model.n_states();
    const double one = log_space ? 0.0 : 1.0;
    Matrix y(g.steps + 1, S, one);
    std::vector<double> next(S, one), cont, gdt;
    for (int i = g.steps - 1; i >= 0; --i) {
        reward_row(model, lat, a_id, i, gdt);
        step_back(model.kernel(i), next, gdt, theta, log_space, cont);
        for (int s = 0; s < S; ++s) {
            y(i, s) = std::max(obstacle(i, s), cont[s]);
            next[s] = y(i, s);
        }
    }
    for (int i = 0; i <= g.steps; ++i)
        for (int s = 0; s < S; ++s) {
            require(y(i, s) >= obstacle(i, s) - eps_eq(y(i, s)), Errc::ObstacleViolation,
                    "value fell below the obstacle");
            if (!log_space)
                require(y(i, s) > 0.0 && std::isfinite(y(i, s)), Errc::Overflow,
                        "risk-sensitive value left (0, inf); rerun in log space");
        }
    return y;
}

SolveReport solve(const MarkovLattice& model, const ImpulseMenu& menu,
                  const CumulativeLattice& lat, double theta, LogSpacePolicy policy) {
    require(theta > 0.0, Errc::BadSpec, "risk-sensitive solver needs theta > 0");
    model.validate(lat);
    const TimeGrid& g = model.grid;
    const int S = model.n_states();
    const int max_n = lat.max_depth();

    const double budget = exponent_budget(model, menu, theta);
    bool log_space = false;
    switch (policy) {
        case LogSpacePolicy::Auto: log_space = budget > kLogSpaceThreshold; break;
        case LogSpacePolicy::Always: log_space = true; break;
        case LogSpacePolicy::Never:
            require(budget <= kOverflowCap, Errc::Overflow,
                    "exponent budget exceeds the linear-mode cap");
            log_space = false;
            break;
    }

    SolveReport rep;
    rep.log_space = log_space;
    rep.theta = theta;
    rep.obstacles.resize(max_n + 1);
    rep.diagnostics.resize(max_n + 1);
    rep.values.push_back(compute_y0(model, lat, theta, log_space));

    for (int n = 1; n <= max_n; ++n) {
        ValueField level(n, lat.size());
        ObstacleField obst(n, lat.size());
        LevelDiagnostics diag;
        diag.monotone_residual = std::numeric_limits<double>::infinity();
        std::vector<int> ids;
        for (int a = 0; a < lat.size(); ++a)
            if (lat.depth(a) <= max_n - n) ids.push_back(a);
        parallel_for(static_cast<int>(ids.size()), [&](int t) {
            const int a = ids[t];
            obst.at(a) =
                compute_obstacle(model, lat, menu, a, rep.values[n - 1], theta, log_space);
            level.at(a) = solve_level(model, lat, a, obst.at(a), theta, log_space);
        });
        for (int a : ids) {
            const Matrix& o = obst.at(a);
            const Matrix& y = level.at(a);
            const Matrix& prev_y = rep.values[n - 1].at(a);
            for (int i = 0; i <= g.steps; ++i)
                for (int s = 0; s < S; ++s) {
                    if (i >= g.steps - g.delay_steps) {
                        require(std::abs(y(i, s) - o(i, s)) <= eps_eq(y(i, s)),
                                Errc::ObstacleViolation,
                                "restriction identity failed on the terminal window");
                        diag.restriction_gap =
                            std::max(diag.restriction_gap, std::abs(y(i, s) - o(i, s)));
                    }
                    diag.monotone_residual =
                        std::min(diag.monotone_residual, y(i, s) - prev_y(i, s));
                }
        }
        rep.obstacles[n] = std::move(obst);
        rep.values.push_back(std::move(level));
        rep.diagnostics[n] = diag;
    }

    const auto weights = model.initial_weights();
    rep.level_values.resize(max_n + 1, 0.0);
    for (int n = 0; n <= max_n; ++n) {
        double v = 0.0;
        for (int s = 0; s < S; ++s) {
            const double y0 = rep.values[n].at(0)(0, s);
            v += weights[s] * (log_space ? std::exp(y0) : y0);
        }
        rep.level_values[n] = v;
    }
    rep.value = rep.level_values[max_n];
    rep.rule = extract_strategy(rep, model, lat, menu);
    return rep;
}

StrategyRule extract_strategy(const SolveReport& report, const MarkovLattice& model,
                              const CumulativeLattice& lat, const ImpulseMenu& menu) {
    const TimeGrid& g = model.grid;
    const int S = model.n_states();
    const int max_n = static_cast<int>(report.values.size()) - 1;
    const bool log_space = report.log_space;
    const double theta = report.theta;

    StrategyRule rule;
    rule.levels = max_n;
    rule.steps = g.steps;
    rule.delay_steps = g.delay_steps;
    rule.stop.resize(max_n);
    rule.size.resize(max_n);

    for (int k = 1; k <= max_n; ++k) {
        const int n = max_n - k + 1;
        const ValueField& y = report.values[n];
        const ObstacleField& o = report.obstacles[n];
        const ValueField& down = report.values[n - 1];
        rule.stop[k - 1].resize(lat.size());
        rule.size[k - 1].resize(lat.size());
        for (int a = 0; a < lat.size(); ++a) {
            if (!y.has(a)) continue;
            Table<unsigned char> st(g.steps + 1, S, 0);
            Table<int> sz(g.steps + 1, S, 0);
            for (int i = 0; i <= g.steps; ++i)
                for (int s = 0; s < S; ++s) {
                    st(i, s) = std::abs(y.at(a)(i, s) - o.at(a)(i, s)) <= eps_eq(y.at(a)(i, s));
                    double best = -std::numeric_limits<double>::infinity();
                    int arg = 0;
                    for (int j = 0; j < menu.size(); ++j) {
                        const int child = lat.child_of(a, j);
                        if (child == CumulativeLattice::kNoChild || !down.has(child)) continue;
                        const double dn = down.at(child)(i, s);
                        const double cand = log_space ? -theta * menu.costs[j] + dn
                                                      : std::exp(-theta * menu.costs[j]) * dn;
                        if (cand > best) {
                            best = cand;
                            arg = j;
                        }
                    }
                    sz(i, s) = arg;
                }
            rule.stop[k - 1][a] = std::move(st);
            rule.size[k - 1][a] = std::move(sz);
        }
    }
    return rule;
}

double evaluate_strategy_exact(const StrategyRule& rule, const MarkovLattice& model,
                               const CumulativeLattice& lat, const ImpulseMenu& menu,
                               double theta, bool log_space) {
    const TimeGrid& g = model.grid;
    const int S = model.n_states();
    const int d = g.delay_steps;
    const int A = lat.size();
    const int K = rule.levels + 2;
    const int M = std::max(1, d);
    require(rule.steps == g.steps && rule.delay_steps == d, Errc::InadmissibleRule,
            "rule was built for a different grid");
    if (!log_space)
        require(exponent_budget(model, menu, theta) <= kOverflowCap, Errc::Overflow,
                "exponent budget exceeds the linear-mode cap");

    const double one = log_space ? 0.0 : 1.0;
    auto idx = [&](int s, int a, int m, int k, int alive) {
        return (((s * A + a) * M + m) * K + k) * 2 + alive;
    };
    std::vector<double> cur(static_cast<std::size_t>(S) * A * M * K * 2, one);
    std::vector<double> next(cur.size(), one);

    auto exec_resolve = [&](const std::vector<double>& slab, int i_exec, int s, int a, int k,
                            int alive) -> double {
        // states the rule does not cover are unreachable from the root
        if (!rule.covers(k - 1, a)) return one;
        const int j = rule.size_at(k - 1, a)(i_exec, s);
        require(j >= 0 && j < menu.size(), Errc::InadmissibleRule, "size outside the menu");
        const int child = lat.child_of(a, j);
        if (child == CumulativeLattice::kNoChild) return one;
        const double down = slab[idx(s, child, 0, k, alive)];
        return log_space ? -theta * menu.costs[j] + down
                         : std::exp(-theta * menu.costs[j]) * down;
    };

    // expectation of the continuation slab entries selected by pick(t)
    auto expect = [&](const Matrix& P, int s, auto&& pick) -> double {
        if (!log_space) {
            double acc = 0.0;
            for (int t = 0; t < S; ++t)
                if (P(s, t) > 0.0) acc += P(s, t) * pick(t);
            return acc;
        }
        double m = -std::numeric_limits<double>::infinity();
        for (int t = 0; t < S; ++t)
            if (P(s, t) > 0.0) m = std::max(m, pick(t));
        if (!std::isfinite(m)) return m;
        double acc = 0.0;
        for (int t = 0; t < S; ++t)
            if (P(s, t) > 0.0) acc += P(s, t) * std::exp(pick(t) - m);
        return m + std::log(acc);
    };

    for (int i = g.steps - 1; i >= 0; --i) {
        const Matrix& P = model.kernel(i);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const double gdt = theta * model.reward_at(i, s, lat, a) * g.dt;
                auto weight = [&](double x) { return log_space ? gdt + x : std::exp(gdt) * x; };
                for (int k = 1; k < K; ++k) {
                    for (int alive = 0; alive < 2; ++alive) {
                        const bool can_stop = alive && k <= rule.levels && rule.covers(k, a) &&
                                              rule.stop_at(k, a)(i, s);
                        double cont;
                        if (can_stop) {
                            const int alive2 = i <= g.steps - 2 * d ? 1 : 0;
                            cont = expect(P, s, [&](int t) {
                                if (d - 1 >= 1) return next[idx(t, a, d - 1, k + 1, alive2)];
                                return i + 1 < g.steps
                                           ? exec_resolve(next, i + 1, t, a, k + 1, alive2)
                                           : one;
                            });
                        } else {
                            cont = expect(P, s, [&](int t) { return next[idx(t, a, 0, k, alive)]; });
                        }
                        cur[idx(s, a, 0, k, alive)] = weight(cont);

                        for (int m = 1; m < M; ++m) {
                            const double pc = expect(P, s, [&](int t) {
                                if (m - 1 >= 1) return next[idx(t, a, m - 1, k, alive)];
                                return i + 1 < g.steps ? exec_resolve(next, i + 1, t, a, k, alive)
                                                       : one;
                            });
                            cur[idx(s, a, m, k, alive)] = weight(pc);
                        }
                    }
                }
            }
        }
        std::swap(cur, next);
    }

    const auto weights = model.initial_weights();
    double v = 0.0;
    for (int s = 0; s < S; ++s) {
        const double y = next[idx(s, 0, 0, 1, 1)];
        v += weights[s] * (log_space ? std::exp(y) : y);
    }
    return v;
}

}  // namespace impulse::rs
