#include <doctest.h>

#include <random>

#include "impulse/cumulative_lattice.hpp"
#include "impulse/fixtures.hpp"
#include "impulse/strategy.hpp"
#include "impulse/time_grid.hpp"

using namespace impulse;

TEST_CASE("time grid derives step counts and the impulse budget") {
    const TimeGrid g = build_time_grid(1.0, 0.4, 0.1);
    CHECK(g.steps == 10);
    CHECK(g.delay_steps == 4);
    CHECK(g.max_impulses == 2);

    const TimeGrid g2 = build_time_grid(1.0, 0.5, 0.5);
    CHECK(g2.steps == 2);
    CHECK(g2.delay_steps == 1);
    CHECK(g2.max_impulses == 2);

    const TimeGrid g3 = build_time_grid(1.0, 0.3, 0.1);
    CHECK(g3.delay_steps == 3);
    CHECK(g3.max_impulses == 3);
}

TEST_CASE("non-commensurate grids are rejected") {
    CHECK_THROWS_WITH_AS(build_time_grid(1.0, 0.33, 0.1), doctest::Contains("NonCommensurate"),
                         SolverError);
    CHECK_THROWS_AS(build_time_grid(0.3, 0.4, 0.1), SolverError);
    CHECK_THROWS_AS(build_time_grid(1.0, 0.4, -0.1), SolverError);
}

TEST_CASE("menu items must be distinct with nonnegative costs") {
    CHECK_THROWS_AS(make_menu({Vec{1.0}, Vec{1.0}}, {0.1, 0.1}), SolverError);
    CHECK_THROWS_AS(make_menu({Vec{1.0}}, {-0.1}), SolverError);
    try {
        make_menu({Vec{2.0}, Vec{2.0}}, {0.0, 0.0});
        CHECK(false);
    } catch (const SolverError& e) {
        CHECK(e.code == Errc::DistinctItems);
    }
}

TEST_CASE("cumulative lattice of a single item is a chain") {
    const auto menu = make_menu({Vec{1.0}}, {0.0});
    const auto lat = build_cumulative_lattice(menu, 2);
    CHECK(lat.size() == 3);
    CHECK(lat.value(0) == Vec{0.0});
    CHECK(lat.depth(0) == 0);
    CHECK(lat.child_of(0, 0) == 1);
    CHECK(lat.child_of(1, 0) == 2);
    CHECK(lat.child_of(2, 0) == CumulativeLattice::kNoChild);
}

TEST_CASE("cumulative lattice deduplicates opposing items") {
    const auto menu = make_menu({Vec{1.0}, Vec{-1.0}}, {0.0, 0.0});
    const auto lat = build_cumulative_lattice(menu, 2);
    // {-2,-1,0,+1,+2}
    CHECK(lat.size() == 5);
    const int plus = lat.child_of(0, 0);
    const int minus = lat.child_of(0, 1);
    CHECK(lat.child_of(plus, 1) == 0);  // +1 - 1 folds back to zero
    CHECK(lat.child_of(minus, 0) == 0);
    CHECK(lat.depth(lat.child_of(plus, 0)) == 2);
}

TEST_CASE("parent arcs land on the parent value plus the item") {
    const auto menu = make_menu({Vec{0.75}, Vec{-0.5}}, {0.0, 0.0});
    const auto lat = build_cumulative_lattice(menu, 4);
    for (int a = 0; a < lat.size(); ++a)
        for (int j = 0; j < menu.size(); ++j) {
            const int child = lat.child_of(a, j);
            if (child == CumulativeLattice::kNoChild) continue;
            CHECK(lat.value(child)[0] == doctest::Approx(lat.value(a)[0] + menu.items[j][0])
                                             .epsilon(1e-12));
        }
}

TEST_CASE("admissibility accepts delay-spaced traces and rejects violations") {
    const auto p = fixtures::d1();
    const auto ok = make_trace(p.grid, {{0.0, 0}, {0.4, 0}});
    CHECK(trace_admissible(ok, p.grid, p.menu));

    // decisions closer than the delay
    const auto bad = make_trace(p.grid, {{0.0, 0}, {0.3, 0}});
    CHECK_FALSE(trace_admissible(bad, p.grid, p.menu));
    // off-grid time
    const auto off = make_trace(p.grid, {{0.05, 0}});
    CHECK_FALSE(trace_admissible(off, p.grid, p.menu));
    // unknown item
    const auto item = make_trace(p.grid, {{0.0, 3}});
    CHECK_FALSE(trace_admissible(item, p.grid, p.menu));
    // beyond the horizon
    const auto late = make_trace(p.grid, {{1.1, 0}});
    CHECK_FALSE(trace_admissible(late, p.grid, p.menu));
}

TEST_CASE("random spacing perturbations below the delay are rejected") {
    const auto p = fixtures::d1();
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> start(0, 3);
    for (int rep = 0; rep < 50; ++rep) {
        const double t1 = 0.1 * start(rng);
        const double t2 = t1 + 0.4;
        CHECK(trace_admissible(make_trace(p.grid, {{t1, 0}, {t2, 0}}), p.grid, p.menu));
        std::uniform_int_distribution<int> shrink(1, 3);
        const double bad = t2 - 0.1 * shrink(rng);
        if (bad >= t1) {
            const bool admissible =
                trace_admissible(make_trace(p.grid, {{t1, 0}, {bad, 0}}), p.grid, p.menu);
            CHECK_FALSE(admissible);
        }
    }
}

TEST_CASE("payoff of the D1 schedules matches hand integration") {
    const auto p = fixtures::d1();
    const std::vector<int> path(11, 0);

    const auto two = make_trace(p.grid, {{0.0, 0}, {0.4, 0}});
    const auto b2 = evaluate_controlled_payoff(p.model, p.lat, p.menu, two, path,
                                               Mode::RiskNeutral);
    CHECK(b2.total == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(b2.reward_integral == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(b2.charged_costs == doctest::Approx(0.2).epsilon(1e-14));

    // second decision exactly at T - delay: no cost, no effect
    const auto edge = make_trace(p.grid, {{0.0, 0}, {0.6, 0}});
    const auto be = evaluate_controlled_payoff(p.model, p.lat, p.menu, edge, path,
                                               Mode::RiskNeutral);
    CHECK(be.total == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(be.charged_costs == doctest::Approx(0.1).epsilon(1e-14));

    const auto none = StrategyTrace{};
    CHECK(evaluate_controlled_payoff(p.model, p.lat, p.menu, none, path, Mode::RiskNeutral)
              .total == 0.0);
    CHECK(evaluate_controlled_payoff(p.model, p.lat, p.menu, none, path, Mode::RiskSensitive)
              .total == 1.0);
}

TEST_CASE("zero reward payoffs equal minus the charged costs exactly") {
    auto p = fixtures::r3(3);
    // zero out the reward table
    for (auto& per_time : p.model.reward.table)
        for (auto& per_state : per_time)
            for (auto& v : per_state) v = 0.0;
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> item(0, p.menu.size() - 1);
    std::uniform_int_distribution<int> state(0, 2);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<int> path(p.grid.steps + 1);
        for (auto& s : path) s = state(rng);
        std::vector<std::pair<double, int>> decs;
        double t = 0.125 * (rng() % 2);
        while (t <= p.grid.horizon - 1e-9 && decs.size() < 4) {
            decs.emplace_back(t, item(rng));
            t += p.grid.delay + 0.125 * (rng() % 3);
            t = std::round(t / p.grid.dt) * p.grid.dt;
        }
        const auto trace = make_trace(p.grid, decs);
        double charged = 0.0;
        for (const auto& imp : trace.impulses)
            if (imp.decision_time < p.grid.horizon - p.grid.delay - 1e-12)
                charged += p.menu.costs[imp.item];
        const auto b =
            evaluate_controlled_payoff(p.model, p.lat, p.menu, trace, path, Mode::RiskNeutral);
        CHECK(b.total == doctest::Approx(-charged).epsilon(1e-14));
    }
}

TEST_CASE("cumulative lattice covers every admissible trace's running sum") {
    const auto p = fixtures::r3(5);
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> item(0, p.menu.size() - 1);
    for (int rep = 0; rep < 100; ++rep) {
        int id = 0;
        double sum = 0.0;
        const int n = 1 + static_cast<int>(rng() % p.grid.max_impulses);
        for (int k = 0; k < n; ++k) {
            const int j = item(rng);
            id = p.lat.child_of(id, j);
            REQUIRE(id != CumulativeLattice::kNoChild);
            sum += p.menu.items[j][0];
        }
        CHECK(p.lat.value(id)[0] == doctest::Approx(sum).epsilon(1e-12));
    }
}

TEST_CASE("model validation rejects non-stochastic kernels") {
    auto p = fixtures::d1();
    MarkovLattice broken = p.model;
    broken.kernels[0](0, 0) = 0.9;
    CHECK_THROWS_AS(broken.validate(p.lat), SolverError);
}
