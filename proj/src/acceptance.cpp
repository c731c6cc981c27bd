#include "impulse/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "impulse/fixtures.hpp"
#include "impulse/infinite_rn.hpp"
#include "impulse/lattice_rn.hpp"
#include "impulse/lattice_rs.hpp"
#include "impulse/lsmc.hpp"
#include "impulse/oracle.hpp"

namespace impulse::acceptance {

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
    bool pass = true;
    std::ostringstream detail;

    void expect(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (detail.tellp() > 0) detail << "; ";
            detail << what;
        }
    }
    void note(const std::string& what) {
        if (detail.tellp() > 0) detail << "; ";
        detail << what;
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

CriterionResult finish(int id, const std::string& name, Check& c, Clock::time_point t0) {
    CriterionResult r;
    r.id = id;
    r.name = name;
    r.pass = c.pass;
    r.detail = c.detail.str();
    r.elapsed_s = std::chrono::duration<double>(Clock::now() - t0).count();
    return r;
}

// ---- criterion 1 & 2: oracle equivalence on R3 and 20 seeded variants ----

CriterionResult oracle_equivalence_rn(std::uint64_t seed) {
    const auto t0 = Clock::now();
    Check c;
    double worst = 0.0;
    for (std::uint64_t v = 0; v <= 20; ++v) {
        auto p = fixtures::r3(seed + v);
        const auto rep = rn::solve(p.model, p.menu, p.lat);
        const double oracle_value = oracle::brute_force_tree_value(
            p.model, p.lat, p.menu, Mode::RiskNeutral, p.grid.max_impulses);
        worst = std::max(worst, std::abs(rep.value - oracle_value));
    }
    c.expect(worst <= 1e-10, "max |solver - oracle| = " + fmt(worst));
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    c.expect(elapsed < 10.0, "runtime " + fmt(elapsed) + " s");
    c.note("max gap " + fmt(worst) + ", " + fmt(elapsed) + " s");
    return finish(1, "oracle equivalence (risk-neutral), 21 seeded instances", c, t0);
}

CriterionResult oracle_equivalence_rs(std::uint64_t seed) {
    const auto t0 = Clock::now();
    Check c;
    double worst = 0.0;
    for (std::uint64_t v = 0; v <= 20; ++v) {
        auto p = fixtures::r3(seed + v);
        const auto rep = rs::solve(p.model, p.menu, p.lat);
        const double oracle_value = oracle::brute_force_tree_value(
            p.model, p.lat, p.menu, Mode::RiskSensitive, p.grid.max_impulses);
        worst = std::max(worst,
                         std::abs(rep.value - oracle_value) / std::max(1.0, std::abs(oracle_value)));
    }
    c.expect(worst <= 1e-10, "max relative gap = " + fmt(worst));
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    c.expect(elapsed < 10.0, "runtime " + fmt(elapsed) + " s");
    c.note("max relative gap " + fmt(worst) + ", " + fmt(elapsed) + " s");
    return finish(2, "oracle equivalence (risk-sensitive), 21 seeded instances", c, t0);
}

// ---- criterion 3: deterministic closed forms ----

CriterionResult closed_forms() {
    const auto t0 = Clock::now();
    Check c;
    {
        auto p = fixtures::d1();
        const auto rep = rn::solve(p.model, p.menu, p.lat);
        c.expect(std::abs(rep.value - 0.6) <= 1e-12,
                 "D1 risk-neutral " + fmt(rep.value) + " != 0.6");
        const auto rsrep = rs::solve(p.model, p.menu, p.lat);
        c.expect(std::abs(rsrep.value - std::exp(0.6)) <= 1e-12,
                 "D1 risk-sensitive " + fmt(rsrep.value) + " != e^0.6");
    }
    {
        auto p = fixtures::d2_infinite();
        const auto rep = inf::inf_iterate(p.model, p.menu, p.lat, p.certificate, p.settings);
        const double closed = 0.8 * std::exp(-0.5) / (1.0 - std::exp(-0.5));
        const double tol = p.settings.epsilon_fix + 2.0 * p.certificate.tail_bound;
        c.expect(std::abs(rep.value - closed) <= tol,
                 "D2 " + fmt(rep.value) + " vs closed form " + fmt(closed) + " (tol " + fmt(tol) +
                     ")");
        c.note("D2 gap " + fmt(std::abs(rep.value - closed)));
    }
    return finish(3, "deterministic closed forms (D1 rn/rs, D2 infinite)", c, t0);
}

// ---- criterion 4 & 5: restriction identity and terminal conditions ----

CriterionResult restriction_identity(std::uint64_t seed) {
    const auto t0 = Clock::now();
    Check c;
    double worst = 0.0;
    auto run = [&](const io::FiniteProblem& p) {
        const auto rep = rn::solve(p.model, p.menu, p.lat);
        for (std::size_t n = 1; n < rep.diagnostics.size(); ++n)
            worst = std::max(worst, rep.diagnostics[n].restriction_gap);
        const auto rsrep = rs::solve(p.model, p.menu, p.lat);
        for (std::size_t n = 1; n < rsrep.diagnostics.size(); ++n)
            worst = std::max(worst, rsrep.diagnostics[n].restriction_gap);
    };
    run(fixtures::d1());
    run(fixtures::r3(seed));
    run(fixtures::r3(seed + 1));
    {
        auto sp = fixtures::swing_small();
        io::FiniteProblem p{sp.grid, sp.lat, sp.model, sp.menu};
        run(p);
    }
    c.expect(worst <= 1e-12, "max |Y - O| on the terminal window = " + fmt(worst));
    c.note("max gap " + fmt(worst));
    return finish(4, "restriction identity on [T - delay, T]", c, t0);
}

CriterionResult terminal_conditions(std::uint64_t seed) {
    const auto t0 = Clock::now();
    Check c;
    auto check_fields = [&](const std::vector<ValueField>& fields, double expected,
                            const std::string& tag) {
        for (const auto& level : fields)
            for (std::size_t a = 0; a < level.per_a.size(); ++a) {
                if (!level.has(static_cast<int>(a))) continue;
                const Matrix& y = level.at(static_cast<int>(a));
                for (std::size_t s = 0; s < y.cols(); ++s)
                    if (y(y.rows() - 1, s) != expected) {
                        c.expect(false, tag + ": terminal value not exact");
                        return;
                    }
            }
    };
    auto run = [&](const io::FiniteProblem& p, const std::string& tag) {
        check_fields(rn::solve(p.model, p.menu, p.lat).values, 0.0, tag + " rn");
        check_fields(rs::solve(p.model, p.menu, p.lat).values, 1.0, tag + " rs");
    };
    run(fixtures::d1(), "D1");
    run(fixtures::r3(seed), "R3");
    return finish(5, "terminal conditions Y_N = 0 (rn) and Y_N = 1 (rs), exact", c, t0);
}

// ---- criterion 6 & 7: strategy identity and dominance ----

CriterionResult strategy_identity(std::uint64_t seed) {
    const auto t0 = Clock::now();
    Check c;
    double worst = 0.0;
    auto run = [&](const io::FiniteProblem& p, const std::string& tag) {
        const auto rep = rn::solve(p.model, p.menu, p.lat);
        const double replay = rn::evaluate_strategy_exact(rep.rule, p.model, p.lat, p.menu);
        worst = std::max(worst, std::abs(replay - rep.value));
        c.expect(std::abs(replay - rep.value) <= 1e-10, tag + " rn replay gap " +
                                                            fmt(std::abs(replay - rep.value)));
        const auto rsrep = rs::solve(p.model, p.menu, p.lat);
        const double rsreplay =
            rs::evaluate_strategy_exact(rsrep.rule, p.model, p.lat, p.menu, rsrep.theta);
        worst = std::max(worst, std::abs(rsreplay - rsrep.value));
        c.expect(std::abs(rsreplay - rsrep.value) <= 1e-10,
                 tag + " rs replay gap " + fmt(std::abs(rsreplay - rsrep.value)));
    };
    run(fixtures::d1(), "D1");
    run(fixtures::r3(seed), "R3");
    {
        auto sp = fixtures::swing_small();
        io::FiniteProblem p{sp.grid, sp.lat, sp.model, sp.menu};
        run(p, "swing");
    }
    c.note("max replay gap " + fmt(worst));
    return finish(6, "extracted strategy replays the solver value", c, t0);
}

CriterionResult dominance(std::uint64_t seed) {
    const auto t0 = Clock::now();
    Check c;
    double worst = -1.0;
    auto run = [&](const io::FiniteProblem& p, const std::string& tag) {
        const auto rep = rn::solve(p.model, p.menu, p.lat);
        const auto rsrep = rs::solve(p.model, p.menu, p.lat);
        for (int r = 0; r < 100; ++r) {
            const auto rule = oracle::random_admissible_rule(p.grid, p.menu, p.lat,
                                                             p.model.n_states(), seed + 1000 + r);
            const double v = rn::evaluate_strategy_exact(rule, p.model, p.lat, p.menu);
            worst = std::max(worst, v - rep.value);
            if (v > rep.value + 1e-10) {
                c.expect(false, tag + " rn rule beats the solver by " + fmt(v - rep.value));
                return;
            }
            const double vs = rs::evaluate_strategy_exact(rule, p.model, p.lat, p.menu);
            if (vs > rsrep.value + 1e-10) {
                c.expect(false, tag + " rs rule beats the solver by " + fmt(vs - rsrep.value));
                return;
            }
        }
    };
    run(fixtures::d1(), "D1");
    run(fixtures::r3(seed), "R3");
    {
        auto sp = fixtures::swing_small();
        io::FiniteProblem p{sp.grid, sp.lat, sp.model, sp.menu};
        run(p, "swing");
    }
    c.note("closest rule within " + fmt(worst) + " of the optimum");
    return finish(7, "dominance over 100 random admissible rules per fixture", c, t0);
}

// ---- criterion 8: infinite-horizon monotonicity, sandwich, doubling ----

CriterionResult infinite_invariants(std::uint64_t seed) {
    const auto t0 = Clock::now();
    Check c;
    auto run = [&](io::InfiniteProblem p, io::InfiniteProblem doubled, const std::string& tag) {
        const auto rep = inf::inf_iterate(p.model, p.menu, p.lat, p.certificate, p.settings);
        c.expect(rep.monotone_violation >= -1e-12,
                 tag + " monotonicity violated by " + fmt(-rep.monotone_violation));
        // sandwich: y0 <= limit <= discounted gamma-bound field
        double sandwich_breach = 0.0;
        for (int a = 0; a < p.lat.size(); ++a) {
            if (!rep.limit.has(a)) continue;
            const Matrix& y = rep.limit.at(a);
            const Matrix& y0 = rep.y0.at(a);
            for (std::size_t i = 0; i < y.rows(); ++i) {
                const double bound = p.model.gamma_bound *
                                     (std::exp(-p.settings.rate * p.grid.time(i)) -
                                      std::exp(-p.settings.rate * p.grid.horizon)) /
                                         p.settings.rate +
                                     p.certificate.tail_bound;
                for (std::size_t s = 0; s < y.cols(); ++s) {
                    sandwich_breach = std::max(sandwich_breach, y0(i, s) - y(i, s));
                    sandwich_breach = std::max(sandwich_breach, y(i, s) - bound);
                }
            }
        }
        c.expect(sandwich_breach <= 1e-9, tag + " sandwich breached by " + fmt(sandwich_breach));
        const auto rep2 =
            inf::inf_iterate(doubled.model, doubled.menu, doubled.lat, doubled.certificate,
                             doubled.settings);
        const double move = std::abs(rep2.value - rep.value);
        c.expect(move <= 2.0 * p.certificate.tail_bound,
                 tag + " doubling moved the value by " + fmt(move) + " > 2 tail " +
                     fmt(2.0 * p.certificate.tail_bound));
    };
    {
        auto p = fixtures::d2_infinite();
        auto dbl = fixtures::d2_infinite(2.0 * p.certificate.t_trunc);
        run(std::move(p), std::move(dbl), "D2");
    }
    {
        auto p = fixtures::r3_infinite(seed);
        auto dbl = fixtures::r3_infinite(seed, 2.0 * p.certificate.t_trunc);
        run(std::move(p), std::move(dbl), "R3inf");
    }
    return finish(8, "infinite-horizon monotonicity, sandwich and truncation doubling", c, t0);
}

// ---- criterion 9: LSMC consistency on the matched swing instance ----

CriterionResult lsmc_consistency(std::uint64_t seed) {
    const auto t0 = Clock::now();
    Check c;
    auto sp = fixtures::swing_small();
    const auto exact = rn::solve(sp.model, sp.menu, sp.lat);

    lsmc::PathSpec spec;
    spec.kind = lsmc::PathSpec::Kind::MarkovChain;
    spec.chain = &sp.model;
    const auto fit_paths = lsmc::simulate_paths(spec, sp.grid, 100000, seed);
    const auto fresh_paths = lsmc::simulate_paths(spec, sp.grid, 100000, seed + 777);

    lsmc::Config cfg;
    cfg.basis.kind = lsmc::RegressionBasis::Kind::LatticeIndicator;
    cfg.basis.lattice_states = sp.model.states;
    const lsmc::RewardFn reward = sp.model.reward.fn;

    const auto fit = lsmc::lsmc_solve(fit_paths, sp.menu, sp.grid, sp.lat, reward, cfg);
    const auto oos =
        lsmc::simulate_strategy_payoff(fit.rule, fresh_paths, sp.menu, sp.grid, sp.lat, reward);

    c.expect(std::abs(fit.value_insample - exact.value) <= 3.0 * fit.stderr_insample,
             "in-sample " + fmt(fit.value_insample) + " vs exact " + fmt(exact.value) +
                 " (3se " + fmt(3.0 * fit.stderr_insample) + ")");
    c.expect(std::abs(oos.mean - exact.value) <= 3.0 * oos.se,
             "out-of-sample " + fmt(oos.mean) + " vs exact " + fmt(exact.value) + " (3se " +
                 fmt(3.0 * oos.se) + ")");
    c.expect(oos.mean <= exact.value + 3.0 * oos.se, "out-of-sample exceeds the optimum");
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    c.expect(elapsed < 120.0, "runtime " + fmt(elapsed) + " s");
    c.note("exact " + fmt(exact.value) + ", in " + fmt(fit.value_insample) + ", oos " +
           fmt(oos.mean) + " +- " + fmt(oos.se));
    return finish(9, "LSMC consistency on the matched swing instance", c, t0);
}

// ---- criterion 10: impulse budget ----

CriterionResult impulse_budget() {
    const auto t0 = Clock::now();
    Check c;
    struct Case {
        double T, delta;
        int expected;
    };
    const Case cases[] = {{1.0, 0.4, 2}, {1.0, 0.5, 2}, {1.0, 0.3, 3}};
    for (const auto& cs : cases) {
        const TimeGrid grid = build_time_grid(cs.T, cs.delta, 0.1);
        c.expect(grid.max_impulses == cs.expected,
                 "floor(T/delta) for delta " + fmt(cs.delta) + " gave " +
                     std::to_string(grid.max_impulses));
        const int effective = oracle::max_effective_impulses(grid);
        c.expect(effective <= cs.expected,
                 "enumeration found " + std::to_string(effective) +
                     " effective impulses > budget " + std::to_string(cs.expected));
    }
    return finish(10, "impulse budget floor(T/delay) confirmed by enumeration", c, t0);
}

}  // namespace

std::vector<CriterionResult> run_suite(const std::string& suite, std::uint64_t seed) {
    std::vector<CriterionResult> out;
    const bool all = suite == "all";
    if (all || suite == "oracle") {
        out.push_back(oracle_equivalence_rn(seed));
        out.push_back(oracle_equivalence_rs(seed));
        out.push_back(closed_forms());
        out.push_back(impulse_budget());
    }
    if (all || suite == "invariants") {
        out.push_back(restriction_identity(seed));
        out.push_back(terminal_conditions(seed));
        out.push_back(strategy_identity(seed));
        out.push_back(dominance(seed));
        out.push_back(infinite_invariants(seed));
    }
    if (all || suite == "mc") {
        out.push_back(lsmc_consistency(seed));
    }
    require(!out.empty(), Errc::BadConfig, "unknown suite " + suite);
    return out;
}

bool print_results(const std::vector<CriterionResult>& results) {
    bool all_pass = true;
    for (const auto& r : results) {
        std::printf("[%s] criterion %2d: %s (%.2fs)%s%s\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.elapsed_s, r.detail.empty() ? "" : " -- ",
                    r.detail.c_str());
        all_pass = all_pass && r.pass;
    }
    return all_pass;
}

}  // namespace impulse::acceptance
