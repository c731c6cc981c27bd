#include <doctest.h>

#include <cmath>

#include "impulse/fixtures.hpp"
#include "impulse/lattice_rn.hpp"
#include "impulse/oracle.hpp"

using namespace impulse;

TEST_CASE("deterministic enumeration finds the D1 optimum and schedule") {
    const auto p = fixtures::d1();
    const auto sol = oracle::enumerate_deterministic(p.model, p.lat, p.menu, Mode::RiskNeutral);
    CHECK(sol.value == doctest::Approx(0.6).epsilon(1e-14));
    REQUIRE(sol.schedule.size() == 2);
    CHECK(sol.schedule[0].first == doctest::Approx(0.0));
    CHECK(sol.schedule[0].second == 0);
    CHECK(sol.schedule[1].first == doctest::Approx(0.4));
    CHECK(sol.schedule[1].second == 0);
}

TEST_CASE("huge costs make doing nothing optimal") {
    auto p = fixtures::d1();
    auto menu = make_menu({Vec{1.0}}, {100.0});
    const auto sol = oracle::enumerate_deterministic(p.model, p.lat, menu, Mode::RiskNeutral);
    CHECK(sol.value == doctest::Approx(0.0));
    CHECK(sol.schedule.empty());
}

TEST_CASE("risk-sensitive deterministic value is the exponential of the risk-neutral one") {
    const auto p = fixtures::d1();
    const auto rn_sol =
        oracle::enumerate_deterministic(p.model, p.lat, p.menu, Mode::RiskNeutral);
    const auto rs_sol =
        oracle::enumerate_deterministic(p.model, p.lat, p.menu, Mode::RiskSensitive);
    CHECK(rs_sol.value == doctest::Approx(std::exp(rn_sol.value)).epsilon(1e-12));
    CHECK(rs_sol.schedule == rn_sol.schedule);
}

TEST_CASE("tree oracle agrees with deterministic enumeration on single-state models") {
    const auto p = fixtures::d1();
    const double tree = oracle::brute_force_tree_value(p.model, p.lat, p.menu,
                                                       Mode::RiskNeutral, p.grid.max_impulses);
    CHECK(tree == doctest::Approx(0.6).epsilon(1e-12));
    const double tree_rs = oracle::brute_force_tree_value(
        p.model, p.lat, p.menu, Mode::RiskSensitive, p.grid.max_impulses);
    CHECK(tree_rs == doctest::Approx(std::exp(0.6)).epsilon(1e-12));
}

TEST_CASE("tree oracle with a zero budget returns the no-impulse value") {
    const auto p = fixtures::r3(17);
    const double v0 = oracle::brute_force_tree_value(p.model, p.lat, p.menu, Mode::RiskNeutral, 0);
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    CHECK(rep.level_values[0] == doctest::Approx(v0).epsilon(1e-12));
    // independent check: chain expectation of the running reward
    const int S = p.model.n_states();
    std::vector<double> y(S, 0.0), tmp;
    for (int i = p.grid.steps - 1; i >= 0; --i) {
        kernel_apply(p.model.kernel(i), y, tmp);
        for (int s = 0; s < S; ++s)
            y[s] = p.model.reward_at(i, s, p.lat, 0) * p.grid.dt + tmp[s];
    }
    const auto w = p.model.initial_weights();
    double expected = 0.0;
    for (int s = 0; s < S; ++s) expected += w[s] * y[s];
    CHECK(v0 == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("tree oracle enforces the enumeration budget") {
    auto p = fixtures::r3(1);
    MarkovLattice big = p.model;
    TimeGrid grid = build_time_grid(4.0, 0.25, 0.125);  // 32 steps: 3^32 histories
    big.grid = grid;
    CHECK_THROWS_AS(
        oracle::brute_force_tree_value(big, p.lat, p.menu, Mode::RiskNeutral, 2),
        SolverError);
}

TEST_CASE("random admissible rules are deterministic in the seed") {
    const auto p = fixtures::r3(2);
    const auto a = oracle::random_admissible_rule(p.grid, p.menu, p.lat, 3, 99);
    const auto b = oracle::random_admissible_rule(p.grid, p.menu, p.lat, 3, 99);
    REQUIRE(a.stop.size() == b.stop.size());
    for (std::size_t k = 0; k < a.stop.size(); ++k)
        for (std::size_t v = 0; v < a.stop[k].size(); ++v) {
            const auto& sa = a.stop[k][v];
            const auto& sb = b.stop[k][v];
            REQUIRE(sa.rows() == sb.rows());
            for (std::size_t i = 0; i < sa.rows(); ++i)
                for (std::size_t s = 0; s < sa.cols(); ++s) {
                    CHECK(sa(i, s) == sb(i, s));
                    CHECK(a.size[k][v](i, s) == b.size[k][v](i, s));
                }
        }
}

TEST_CASE("effective impulse budget matches floor(T/delay) cases") {
    CHECK(oracle::max_effective_impulses(build_time_grid(1.0, 0.4, 0.1)) == 2);
    CHECK(oracle::max_effective_impulses(build_time_grid(1.0, 0.5, 0.1)) == 1);
    CHECK(oracle::max_effective_impulses(build_time_grid(1.0, 0.3, 0.1)) == 3);
}
