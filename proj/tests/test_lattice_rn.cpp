#include <doctest.h>

#include <cmath>
#include <limits>

#include "impulse/fixtures.hpp"
#include "impulse/lattice_rn.hpp"
#include "impulse/oracle.hpp"

using namespace impulse;

namespace {

io::FiniteProblem zero_reward_d1(double cost) {
    io::ModelConfig cfg;
    cfg.horizon = 1.0;
    cfg.delay = 0.4;
    cfg.dt = 0.1;
    cfg.states = {Vec{0.0}};
    cfg.kernels = {Matrix(1, 1, 1.0)};
    cfg.menu = make_menu({Vec{1.0}}, {cost});
    cfg.reward_spec = {{"kind", "linear_level"}, {"c", {0.0}}};
    cfg.gamma_bound = 0.0;
    return io::build_finite(cfg);
}

}  // namespace

TEST_CASE("no-impulse values on D1: zero at the origin, linear in the level") {
    const auto p = fixtures::d1();
    const auto y0 = rn::compute_y0(p.model, p.lat);
    const int a1 = p.lat.child_of(0, 0);
    for (int i = 0; i <= 10; ++i) {
        CHECK(y0.at(0)(i, 0) == 0.0);
        CHECK(y0.at(a1)(i, 0) == doctest::Approx((10 - i) * 0.1).epsilon(1e-14));
    }
    CHECK(y0.at(a1)(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    // terminal value vanishes for every cumulative impulse
    for (int a = 0; a < p.lat.size(); ++a) CHECK(y0.at(a)(10, 0) == 0.0);
}

TEST_CASE("partial reward over the delay window") {
    const auto p = fixtures::d1();
    const int a1 = p.lat.child_of(0, 0);
    const Matrix g1 = rn::compute_partial_reward(p.model, p.lat, a1);
    CHECK(g1(0, 0) == doctest::Approx(0.4).epsilon(1e-14));  // 4 steps at level 1
    CHECK(g1(10, 0) == 0.0);                                 // empty window
    CHECK(g1(8, 0) == doctest::Approx(0.2).epsilon(1e-14));  // clipped window

    // constant reward: G_i = c dt min(d, N - i)
    io::ModelConfig cfg;
    cfg.horizon = 1.0;
    cfg.delay = 0.4;
    cfg.dt = 0.1;
    cfg.states = {Vec{0.0}};
    cfg.kernels = {Matrix(1, 1, 1.0)};
    cfg.menu = make_menu({Vec{1.0}}, {0.1});
    cfg.reward_spec = {{"kind", "table"}, {"values", io::json::array()}};
    for (int i = 0; i < 10; ++i) {
        io::json row = io::json::array();
        io::json per_state = io::json::array();
        io::json per_a = io::json::array();
        for (int a = 0; a < 3; ++a) per_a.push_back(0.7);
        per_state.push_back(per_a);
        cfg.reward_spec["values"].push_back(per_state);
    }
    cfg.gamma_bound = 0.7;
    const auto pc = io::build_finite(cfg);
    const Matrix gc = rn::compute_partial_reward(pc.model, pc.lat, 0);
    for (int i = 0; i <= 10; ++i)
        CHECK(gc(i, 0) == doctest::Approx(0.7 * 0.1 * std::min(4, 10 - i)).epsilon(1e-13));
}

TEST_CASE("obstacle on D1 reproduces the hand-computed level-1 value") {
    const auto p = fixtures::d1();
    const auto y0 = rn::compute_y0(p.model, p.lat);
    const Matrix o1 = rn::compute_obstacle(p.model, p.lat, p.menu, 0, y0);
    CHECK(o1(0, 0) == doctest::Approx(0.5).epsilon(1e-14));  // -0.1 + Y0_{0.4}(+1) = 0.6
    // on the terminal window the obstacle equals the remaining-reward value
    for (int i = 6; i <= 10; ++i) CHECK(o1(i, 0) == doctest::Approx(y0.at(0)(i, 0)));
}

TEST_CASE("obstacle needs the previous level to cover the children") {
    const auto p = fixtures::d1();
    const auto y0 = rn::compute_y0(p.model, p.lat);
    const int a2 = p.lat.child_of(p.lat.child_of(0, 0), 0);  // depth 2: children leave the lattice
    CHECK_THROWS_AS(rn::compute_obstacle(p.model, p.lat, p.menu, a2, y0), SolverError);

    ValueField gap(0, p.lat.size());  // covers nothing
    try {
        rn::compute_obstacle(p.model, p.lat, p.menu, 0, gap);
        CHECK(false);
    } catch (const SolverError& e) {
        CHECK(e.code == Errc::MissingChild);
    }
}

TEST_CASE("a minus-infinity obstacle reduces the Snell recursion to the plain expectation") {
    const auto p = fixtures::d1();
    const auto y0 = rn::compute_y0(p.model, p.lat);
    const int a1 = p.lat.child_of(0, 0);
    Matrix surrogate(p.grid.steps + 1, 1, -std::numeric_limits<double>::infinity());
    const Matrix y = rn::solve_level(p.model, p.lat, a1, surrogate);
    for (int i = 0; i <= 10; ++i) CHECK(y(i, 0) == doctest::Approx(y0.at(a1)(i, 0)));
}

TEST_CASE("D1 level values and optimum match the hand DP") {
    const auto p = fixtures::d1();
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    CHECK(rep.level_values[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(rep.level_values[2] == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(rep.value == doctest::Approx(0.6).epsilon(1e-14));

    // strategy: decide at t = 0 and t = 0.4, size +1 each time
    const auto& rule = rep.rule;
    CHECK(rule.stop_at(1, 0)(0, 0));
    const int a1 = p.lat.child_of(0, 0);
    CHECK(rule.stop_at(2, a1)(4, 0));
    CHECK(rule.size_at(1, 0)(4, 0) == 0);
    CHECK(rn::evaluate_strategy_exact(rule, p.model, p.lat, p.menu) ==
          doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("zero reward with positive costs leaves nothing to earn") {
    const auto p = zero_reward_d1(0.25);
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    CHECK(rep.value == doctest::Approx(0.0));
    // every decision the rule can issue is a no-effect one at or after T - 2 delay
    CHECK(rn::evaluate_strategy_exact(rep.rule, p.model, p.lat, p.menu) ==
          doctest::Approx(0.0));
}

TEST_CASE("zero reward and zero cost is a degenerate everywhere-stopping tie") {
    const auto p = zero_reward_d1(0.0);
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    CHECK(rep.value == doctest::Approx(0.0));
    CHECK(rep.rule.stop_at(1, 0)(0, 0));  // Y = O = 0 everywhere
    CHECK(rn::evaluate_strategy_exact(rep.rule, p.model, p.lat, p.menu) ==
          doctest::Approx(0.0));
}

TEST_CASE("solver equals the history-tree oracle on seeded 3-state instances") {
    for (std::uint64_t seed : {42ULL, 7ULL, 123ULL}) {
        const auto p = fixtures::r3(seed);
        const auto rep = rn::solve(p.model, p.menu, p.lat);
        const double oracle_value = oracle::brute_force_tree_value(
            p.model, p.lat, p.menu, Mode::RiskNeutral, p.grid.max_impulses);
        CHECK(rep.value == doctest::Approx(oracle_value).epsilon(1e-12));
    }
}

TEST_CASE("solver with a shallower lattice matches the budget-restricted oracle") {
    const auto p = fixtures::r3(21);
    for (int budget = 1; budget <= 2; ++budget) {
        const auto lat_b = build_cumulative_lattice(p.menu, budget);
        MarkovLattice model = p.model;  // table covers the deeper lattice; ids align by prefix
        const auto rep = rn::solve(model, p.menu, lat_b);
        const double oracle_value =
            oracle::brute_force_tree_value(model, p.lat, p.menu, Mode::RiskNeutral, budget);
        CHECK(rep.value == doctest::Approx(oracle_value).epsilon(1e-12));
    }
}

TEST_CASE("restriction identity and terminal zero hold on R3") {
    const auto p = fixtures::r3(4);
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    for (std::size_t n = 1; n < rep.diagnostics.size(); ++n)
        CHECK(rep.diagnostics[n].restriction_gap <= 1e-12);
    for (const auto& level : rep.values)
        for (int a = 0; a < p.lat.size(); ++a) {
            if (!level.has(a)) continue;
            for (int s = 0; s < 3; ++s) CHECK(level.at(a)(p.grid.steps, s) == 0.0);
        }
}

TEST_CASE("values never fall below the obstacle and levels are monotone") {
    const auto p = fixtures::r3(15);
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    for (std::size_t n = 1; n < rep.values.size(); ++n) {
        CHECK(rep.diagnostics[n].monotone_residual >= -1e-12);
        for (int a = 0; a < p.lat.size(); ++a) {
            if (!rep.values[n].has(a)) continue;
            const Matrix& y = rep.values[n].at(a);
            const Matrix& o = rep.obstacles[n].at(a);
            for (int i = 0; i <= p.grid.steps; ++i)
                for (int s = 0; s < 3; ++s) CHECK(y(i, s) >= o(i, s) - eps_eq(y(i, s)));
        }
    }
}

TEST_CASE("extracted strategy replays the solver value on R3") {
    for (std::uint64_t seed : {42ULL, 9ULL}) {
        const auto p = fixtures::r3(seed);
        const auto rep = rn::solve(p.model, p.menu, p.lat);
        const double replay = rn::evaluate_strategy_exact(rep.rule, p.model, p.lat, p.menu);
        CHECK(replay == doctest::Approx(rep.value).epsilon(1e-12));
    }
}

TEST_CASE("a rule that never stops earns exactly the no-impulse value") {
    const auto p = fixtures::r3(42);
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    StrategyRule empty;
    empty.levels = rep.rule.levels;
    empty.steps = p.grid.steps;
    empty.delay_steps = p.grid.delay_steps;
    empty.stop.assign(empty.levels, std::vector<Table<unsigned char>>(p.lat.size()));
    empty.size.assign(empty.levels, std::vector<Table<int>>(p.lat.size()));
    const double v = rn::evaluate_strategy_exact(empty, p.model, p.lat, p.menu);
    CHECK(v == doctest::Approx(rep.level_values[0]).epsilon(1e-12));
}

TEST_CASE("ties in the size argmax pick the lowest menu index") {
    // two distinct items with identical costs whose reward effect coincides
    // because the reward ignores the second coordinate
    io::ModelConfig cfg;
    cfg.horizon = 1.0;
    cfg.delay = 0.4;
    cfg.dt = 0.1;
    cfg.states = {Vec{0.0, 0.0}};
    cfg.kernels = {Matrix(1, 1, 1.0)};
    cfg.menu = make_menu({Vec{1.0, 0.0}, Vec{1.0, 1.0}}, {0.1, 0.1});
    cfg.reward_spec = {{"kind", "linear_level"}, {"c", {1.0, 0.0}}};
    cfg.gamma_bound = 2.0;
    const auto p = io::build_finite(cfg);
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    CHECK(rep.value == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(rep.rule.size_at(1, 0)(4, 0) == 0);
}

TEST_CASE("raising every cost never raises the value") {
    for (std::uint64_t seed : {42ULL, 5ULL}) {
        const auto p = fixtures::r3(seed);
        const auto base = rn::solve(p.model, p.menu, p.lat);
        auto costly = p.menu;
        for (auto& c : costly.costs) c += 0.05;
        const auto bumped = rn::solve(p.model, costly, p.lat);
        CHECK(bumped.value <= base.value + 1e-12);
    }
}

TEST_CASE("random admissible rules never beat the solver") {
    const auto p = fixtures::r3(42);
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    for (int r = 0; r < 100; ++r) {
        const auto rule = oracle::random_admissible_rule(p.grid, p.menu, p.lat, 3, 500 + r);
        const double v = rn::evaluate_strategy_exact(rule, p.model, p.lat, p.menu);
        CHECK(v <= rep.value + 1e-10);
    }
}

TEST_CASE("solver matches the oracle when cumulative sums collide") {
    // +1/2 and -1/2 fold back onto shared lattice values, so the solver
    // reuses merged slices while the oracle counts impulses one by one
    io::ModelConfig cfg;
    cfg.horizon = 1.0;
    cfg.delay = 0.25;
    cfg.dt = 0.125;
    cfg.states = {Vec{-1.0}, Vec{0.0}, Vec{1.0}};
    Matrix k(3, 3, 0.0);
    k(0, 0) = 0.6; k(0, 1) = 0.3; k(0, 2) = 0.1;
    k(1, 0) = 0.2; k(1, 1) = 0.5; k(1, 2) = 0.3;
    k(2, 0) = 0.1; k(2, 1) = 0.4; k(2, 2) = 0.5;
    cfg.kernels = {k};
    cfg.menu = make_menu({Vec{0.5}, Vec{-0.5}}, {0.04, 0.03});
    cfg.reward_spec = {{"kind", "linear_level"}, {"c", {-0.4}}};  // pushing down pays
    cfg.gamma_bound = 0.4 * 3.0 + 1e-9;
    cfg.initial_distribution = {0.2, 0.5, 0.3};
    const auto p = io::build_finite(cfg);
    CHECK(p.lat.size() == 9);  // multiples of 1/2 in [-2, 2]

    const auto rep = rn::solve(p.model, p.menu, p.lat);
    const double tree = oracle::brute_force_tree_value(p.model, p.lat, p.menu,
                                                       Mode::RiskNeutral, p.grid.max_impulses);
    CHECK(rep.value == doctest::Approx(tree).epsilon(1e-12));
    CHECK(rep.value > rep.level_values[0]);  // impulses genuinely help here
}

TEST_CASE("parallel and sequential solves are bit-identical") {
    const auto p = fixtures::r3(42);
    const auto seq = rn::solve(p.model, p.menu, p.lat);
    setenv("IMPULSE_THREADS", "4", 1);
    const auto par = rn::solve(p.model, p.menu, p.lat);
    setenv("IMPULSE_THREADS", "1", 1);
    CHECK(seq.value == par.value);
    for (std::size_t n = 0; n < seq.values.size(); ++n)
        for (int a = 0; a < p.lat.size(); ++a) {
            if (!seq.values[n].has(a)) continue;
            CHECK(seq.values[n].at(a).data() == par.values[n].at(a).data());
        }
}

TEST_CASE("inadmissible traces are rejected by the payoff evaluator") {
    const auto p = fixtures::d1();
    const std::vector<int> path(11, 0);
    const auto tight = make_trace(p.grid, {{0.0, 0}, {0.2, 0}});
    try {
        evaluate_controlled_payoff(p.model, p.lat, p.menu, tight, path, Mode::RiskNeutral);
        CHECK(false);
    } catch (const SolverError& e) {
        CHECK(e.code == Errc::InadmissibleTrace);
    }
}

TEST_CASE("free impulses with a reward that grows in the level stack up monotonically") {
    io::ModelConfig cfg;
    cfg.horizon = 1.0;
    cfg.delay = 0.25;
    cfg.dt = 0.125;
    cfg.states = {Vec{-1.0}, Vec{0.0}, Vec{1.0}};
    Matrix k(3, 3, 0.0);
    k(0, 0) = 0.5; k(0, 1) = 0.5;
    k(1, 0) = 0.25; k(1, 1) = 0.5; k(1, 2) = 0.25;
    k(2, 1) = 0.5; k(2, 2) = 0.5;
    cfg.kernels = {k};
    cfg.menu = make_menu({Vec{0.5}}, {0.0});
    cfg.reward_spec = {{"kind", "linear_level"}, {"c", {0.3}}};
    cfg.gamma_bound = 0.3 * (1.0 + 4 * 0.5) + 1e-9;
    const auto p = io::build_finite(cfg);
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    for (std::size_t n = 1; n < rep.values.size(); ++n)
        CHECK(rep.diagnostics[n].monotone_residual >= -1e-12);
    const double oracle_value = oracle::brute_force_tree_value(p.model, p.lat, p.menu,
                                                               Mode::RiskNeutral,
                                                               p.grid.max_impulses);
    CHECK(rep.value == doctest::Approx(oracle_value).epsilon(1e-12));
}
