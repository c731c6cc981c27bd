#include "impulse/infinite_rn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace impulse::inf {

TruncationCertificate choose_truncation(double rate, double gamma_bound, double epsilon,
                                        double dt, double delay) {
    require(rate > 0.0, Errc::NonPositiveRate, "discount rate must be positive");
    require(gamma_bound >= 0.0, Errc::BadSpec, "gamma bound must be nonnegative");
    require(epsilon > 0.0, Errc::BadSpec, "epsilon must be positive");
    require(dt > 0.0 && delay > 0.0, Errc::BadSpec, "need positive dt and delay");

    TruncationCertificate cert;
    cert.epsilon_target = epsilon;
    double t = delay;
    if (gamma_bound > 0.0) {
        const double t_req = std::log(gamma_bound / (rate * epsilon)) / rate;
        if (t_req > t) t = std::ceil(t_req / dt - 1e-12) * dt;
    }
    cert.t_trunc = t;
    cert.tail_bound = gamma_bound * std::exp(-rate * t) / rate;
    require(cert.tail_bound <= epsilon * (1.0 + 1e-9), Errc::BadSpec,
            "truncation does not certify the target");
    return cert;
}

namespace {

void reward_row(const MarkovLattice& model, const CumulativeLattice& lat, int a_id, int i,
                std::vector<double>& out) {
    const int S = model.n_states();
    out.resize(S);
    for (int s = 0; s < S; ++s) out[s] = model.reward_at(i, s, lat, a_id);
}

}  // namespace

ValueField compute_y0(const MarkovLattice& model, const CumulativeLattice& lat, double rate,
                      int depth_cap) {
    const TimeGrid& g = model.grid;
    const int S = model.n_states();
    ValueField field(0, lat.size());
    std::vector<double> gi, cont;
    for (int a = 0; a < lat.size(); ++a) {
        if (lat.depth(a) > depth_cap) continue;
        Matrix y(g.steps + 1, S, 0.0);
        std::vector<double> next(S, 0.0);
        for (int i = g.steps - 1; i >= 0; --i) {
            kernel_apply(model.kernel(i), next, cont);
            reward_row(model, lat, a, i, gi);
            const double w = step_weight(rate, g.time(i), g.dt);
            for (int s = 0; s < S; ++s) {
                y(i, s) = gi[s] * w + cont[s];
                next[s] = y(i, s);
            }
        }
        field.at(a) = std::move(y);
    }
    return field;
}

Matrix inf_obstacle(const MarkovLattice& model, const CumulativeLattice& lat,
                    const ImpulseMenu& menu, int a_id, const ValueField& prev, double rate,
                    int depth_cap, long* beyond_cap_reads) {
    const TimeGrid& g = model.grid;
    const int S = model.n_states();
    const int d = g.delay_steps;
    Matrix out(g.steps + 1, S, 0.0);
    std::vector<double> w, tmp, gi, v(S);

    for (int i = g.steps; i >= 0; --i) {
        // expected reward over the delay window, clipped at the truncation
        const int end = std::min(i + d, g.steps);
        w.assign(S, 0.0);
        for (int j = end - 1; j >= i; --j) {
            kernel_apply(model.kernel(j), w, tmp);
            reward_row(model, lat, a_id, j, gi);
            const double sw = step_weight(rate, g.time(j), g.dt);
            for (int s = 0; s < S; ++s) w[s] = gi[s] * sw + tmp[s];
        }
        for (int s = 0; s < S; ++s) out(i, s) = w[s];

        // best post-impulse continuation; there is no horizon cutoff here,
        // executions past the truncation keep the cost and read value zero
        const double disc_exec = std::exp(-rate * g.time(i + d));
        if (i + d > g.steps) {
            double best = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < menu.size(); ++j) best = std::max(best, -disc_exec * menu.costs[j]);
            for (int s = 0; s < S; ++s) out(i, s) += best;
        } else {
            for (int s = 0; s < S; ++s) {
                double best = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < menu.size(); ++j) {
                    const int child = lat.child_of(a_id, j);
                    require(child != CumulativeLattice::kNoChild, Errc::MissingChild,
                            "cumulative lattice must extend one level past the cap");
                    double down = 0.0;
                    if (lat.depth(child) <= depth_cap && prev.has(child)) {
                        down = prev.at(child)(i + d, s);
                    } else if (beyond_cap_reads && s == 0) {
                        ++*beyond_cap_reads;
                    }
                    best = std::max(best, -disc_exec * menu.costs[j] + down);
                }
                v[s] = best;
            }
            w = v;
            for (int j = i + d - 1; j >= i; --j) {
                kernel_apply(model.kernel(j), w, tmp);
                w = tmp;
            }
            for (int s = 0; s < S; ++s) out(i, s) += w[s];
        }
    }
    return out;
}

Matrix inf_solve_level(const MarkovLattice& model, const CumulativeLattice& lat, int a_id,
                       const Matrix& obstacle, double rate) {
    const TimeGrid& g = model.grid;
    const int S = model.n_states();
    Matrix y(g.steps + 1, S, 0.0);
    std::vector<double> next(S, 0.0), cont, gi;
    for (int s = 0; s < S; ++s) y(g.steps, s) = std::max(obstacle(g.steps, s), 0.0);
    for (int s = 0; s < S; ++s) next[s] = y(g.steps, s);
    for (int i = g.steps - 1; i >= 0; --i) {
        kernel_apply(model.kernel(i), next, cont);
        reward_row(model, lat, a_id, i, gi);
        const double w = step_weight(rate, g.time(i), g.dt);
        for (int s = 0; s < S; ++s) {
            y(i, s) = std::max(obstacle(i, s), gi[s] * w + cont[s]);
            next[s] = y(i, s);
        }
    }
    for (int i = 0; i <= g.steps; ++i)
        for (int s = 0; s < S; ++s)
            require(y(i, s) >= obstacle(i, s) - eps_eq(y(i, s)), Errc::ObstacleViolation,
                    "value fell below the obstacle");
    return y;
}

FixedPointReport inf_iterate(const MarkovLattice& model, const ImpulseMenu& menu,
                             const CumulativeLattice& lat,
                             const TruncationCertificate& certificate,
                             const IterationSettings& settings) {
    model.validate(lat);
    const TimeGrid& g = model.grid;
    const int S = model.n_states();
    require(settings.rate > 0.0, Errc::NonPositiveRate, "discount rate must be positive");
    require(settings.epsilon_fix > 0.0, Errc::BadSpec, "epsilon_fix must be positive");

    const int cap_default = static_cast<int>(std::ceil(certificate.t_trunc / g.delay - 1e-12));
    const int depth_cap = settings.depth_cap > 0 ? settings.depth_cap : cap_default;
    const int n_max = settings.n_max > 0 ? settings.n_max : 10 * cap_default;
    require(lat.max_depth() >= depth_cap + 1, Errc::MissingChild,
            "cumulative lattice must be built to depth_cap + 1");

    FixedPointReport rep;
    rep.certificate = certificate;
    rep.rate = settings.rate;
    rep.depth_cap = depth_cap;
    rep.y0 = compute_y0(model, lat, settings.rate, depth_cap);
    rep.monotone_violation = 0.0;

    ValueField prev = rep.y0;
    ObstacleField last_obstacle;
    std::vector<int> ids;
    for (int a = 0; a < lat.size(); ++a)
        if (lat.depth(a) <= depth_cap) ids.push_back(a);
    std::vector<long> cap_reads(ids.size(), 0);
    for (int n = 1; n <= n_max; ++n) {
        ValueField next_field(n, lat.size());
        ObstacleField obst(n, lat.size());
        double residual = 0.0;
        parallel_for(static_cast<int>(ids.size()), [&](int t) {
            const int a = ids[t];
            obst.at(a) =
                inf_obstacle(model, lat, menu, a, prev, settings.rate, depth_cap, &cap_reads[t]);
            next_field.at(a) = inf_solve_level(model, lat, a, obst.at(a), settings.rate);
        });
        for (int a : ids) {
            const Matrix& y = next_field.at(a);
            const Matrix& py = prev.at(a);
            for (int i = 0; i <= g.steps; ++i)
                for (int s = 0; s < S; ++s) {
                    const double inc = y(i, s) - py(i, s);
                    residual = std::max(residual, std::abs(inc));
                    rep.monotone_violation = std::min(rep.monotone_violation, inc);
                }
        }
        rep.residuals.push_back(residual);
        rep.iterations = n;
        last_obstacle = std::move(obst);
        prev = std::move(next_field);
        if (residual < settings.epsilon_fix) break;
        if (n == n_max)
            fail(Errc::NoConvergence, "no fixed point after " + std::to_string(n_max) +
                                          " levels; last residual " + std::to_string(residual));
    }
    require(rep.monotone_violation >= -1e-12, Errc::ObstacleViolation,
            "level iteration lost monotonicity");
    for (long c : cap_reads) rep.beyond_cap_reads += c;

    rep.limit = std::move(prev);
    rep.obstacle = std::move(last_obstacle);

    // stationary rule: hit {Y = O}, size by best child value at the execution
    // node (children past the cap read zero), lowest index on ties
    StrategyRule rule;
    rule.levels = 1;
    rule.steps = g.steps;
    rule.delay_steps = g.delay_steps;
    rule.stationary = true;
    rule.stop.resize(1);
    rule.size.resize(1);
    rule.stop[0].resize(lat.size());
    rule.size[0].resize(lat.size());
    for (int a = 0; a < lat.size(); ++a) {
        if (lat.depth(a) > depth_cap) continue;
        Table<unsigned char> st(g.steps + 1, S, 0);
        Table<int> sz(g.steps + 1, S, 0);
        const Matrix& y = rep.limit.at(a);
        const Matrix& o = rep.obstacle.at(a);
        for (int i = 0; i <= g.steps; ++i) {
            const double disc = std::exp(-settings.rate * g.time(i));
            for (int s = 0; s < S; ++s) {
                st(i, s) = std::abs(y(i, s) - o(i, s)) <= eps_eq(y(i, s));
                double best = -std::numeric_limits<double>::infinity();
                int arg = 0;
                for (int j = 0; j < menu.size(); ++j) {
                    const int child = lat.child_of(a, j);
                    if (child == CumulativeLattice::kNoChild) continue;
                    const double down = (lat.depth(child) <= depth_cap && rep.limit.has(child))
                                            ? rep.limit.at(child)(i, s)
                                            : 0.0;
                    const double cand = -disc * menu.costs[j] + down;
                    if (cand > best) {
                        best = cand;
                        arg = j;
                    }
                }
                sz(i, s) = arg;
            }
        }
        rule.stop[0][a] = std::move(st);
        rule.size[0][a] = std::move(sz);
    }
    rep.rule = std::move(rule);

    const auto weights = model.initial_weights();
    rep.value = 0.0;
    for (int s = 0; s < S; ++s) rep.value += weights[s] * rep.limit.at(0)(0, s);
    return rep;
}

double evaluate_strategy(const StrategyRule& rule, const MarkovLattice& model,
                         const CumulativeLattice& lat, const ImpulseMenu& menu, double rate) {
    const TimeGrid& g = model.grid;
    const int S = model.n_states();
    const int d = g.delay_steps;
    const int A = lat.size();
    const int M = std::max(1, d);
    require(rule.stationary, Errc::InadmissibleRule, "infinite-horizon rules are stationary");
    require(rule.steps == g.steps && rule.delay_steps == d, Errc::InadmissibleRule,
            "rule was built for a different grid");

    auto idx = [&](int s, int a, int m) { return (s * A + a) * M + m; };
    std::vector<double> cur(static_cast<std::size_t>(S) * A * M, 0.0);
    std::vector<double> next(cur.size(), 0.0);

    // executions scheduled past the truncation pay the cheapest discounted
    // cost and read nothing, matching the obstacle's beyond-grid branch
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            for (int m = 1; m < M; ++m)
                next[idx(s, a, m)] = -std::exp(-rate * g.time(g.steps + m)) * menu.min_cost();

    auto exec_resolve = [&](const std::vector<double>& slab, int i_exec, int s, int a) -> double {
        // states the rule does not cover are unreachable from the root
        if (!rule.covers(1, a)) return 0.0;
        const int j = rule.size_at(1, a)(i_exec, s);
        require(j >= 0 && j < menu.size(), Errc::InadmissibleRule, "size outside the menu");
        const int child = lat.child_of(a, j);
        if (child == CumulativeLattice::kNoChild) return 0.0;
        return -std::exp(-rate * g.time(i_exec)) * menu.costs[j] + slab[idx(s, child, 0)];
    };

    for (int i = g.steps - 1; i >= 0; --i) {
        const Matrix& P = model.kernel(i);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const double gw = model.reward_at(i, s, lat, a) * step_weight(rate, g.time(i), g.dt);
                const bool can_stop = rule.covers(1, a) && rule.stop_at(1, a)(i, s);
                double cont = 0.0;
                if (can_stop) {
                    // executions at the truncation boundary still pay the
                    // discounted cost and read a zero continuation,
                    // mirroring the obstacle convention
                    for (int t = 0; t < S; ++t) {
                        if (P(s, t) <= 0.0) continue;
                        const double nx = d - 1 >= 1 ? next[idx(t, a, d - 1)]
                                                     : exec_resolve(next, i + 1, t, a);
                        cont += P(s, t) * nx;
                    }
                } else {
                    for (int t = 0; t < S; ++t)
                        if (P(s, t) > 0.0) cont += P(s, t) * next[idx(t, a, 0)];
                }
                cur[idx(s, a, 0)] = gw + cont;

                for (int m = 1; m < M; ++m) {
                    double pc = 0.0;
                    for (int t = 0; t < S; ++t) {
                        if (P(s, t) <= 0.0) continue;
                        const double nx = m - 1 >= 1 ? next[idx(t, a, m - 1)]
                                                     : exec_resolve(next, i + 1, t, a);
                        pc += P(s, t) * nx;
                    }
                    cur[idx(s, a, m)] = gw + pc;
                }
            }
        }
        std::swap(cur, next);
    }

    const auto weights = model.initial_weights();
    double v = 0.0;
    for (int s = 0; s < S; ++s) v += weights[s] * next[idx(s, 0, 0)];
    return v;
}

}  // namespace impulse::inf
