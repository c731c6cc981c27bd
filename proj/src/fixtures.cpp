#include "impulse/fixtures.hpp"

#include <cmath>
#include <random>

namespace impulse::fixtures {

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Matrix random_kernel(int S, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.1, 1.0);
    Matrix k(S, S);
    for (int r = 0; r < S; ++r) {
        double sum = 0.0;
        for (int c = 0; c < S; ++c) {
            k(r, c) = unif(rng);
            sum += k(r, c);
        }
        double acc = 0.0;
        for (int c = 0; c < S - 1; ++c) {
            k(r, c) /= sum;
            acc += k(r, c);
        }
        k(r, S - 1) = 1.0 - acc;  // exact row sum
    }
    return k;
}

}  // namespace

io::FiniteProblem d1() {
    io::ModelConfig cfg;
    cfg.mode = "rn";
    cfg.horizon = 1.0;
    cfg.delay = 0.4;
    cfg.dt = 0.1;
    cfg.states = {Vec{0.0}};
    cfg.kernels = {Matrix(1, 1, 1.0)};
    cfg.menu = make_menu({Vec{1.0}}, {0.1});
    cfg.reward_spec = {{"kind", "linear_level"}, {"params", {{"c", {1.0}}}}};
    cfg.gamma_bound = 2.0;
    return io::build_finite(cfg);
}

io::FiniteProblem r3(std::uint64_t seed) {
    std::mt19937_64 rng(mix(seed));
    std::uniform_real_distribution<double> cost(0.05, 0.3);
    std::uniform_real_distribution<double> rew(-1.0, 1.0);

    io::ModelConfig cfg;
    cfg.mode = "rn";
    cfg.horizon = 1.0;
    cfg.delay = 0.25;
    cfg.dt = 0.125;
    cfg.states = {Vec{-1.0}, Vec{0.0}, Vec{1.0}};
    for (int i = 0; i < 8; ++i) cfg.kernels.push_back(random_kernel(3, rng));
    cfg.menu = make_menu({Vec{0.75}, Vec{-0.5}}, {cost(rng), cost(rng)});
    cfg.gamma_bound = 1.0;
    cfg.initial_distribution = {0.3, 0.4, 0.3};

    // the reward table needs the lattice size; build it the same way
    // build_finite will
    TimeGrid grid = build_time_grid(cfg.horizon, cfg.delay, cfg.dt);
    CumulativeLattice lat = build_cumulative_lattice(cfg.menu, grid.max_impulses);
    io::json values = io::json::array();
    for (int i = 0; i < grid.steps; ++i) {
        io::json per_state = io::json::array();
        for (int s = 0; s < 3; ++s) {
            io::json row = io::json::array();
            for (int a = 0; a < lat.size(); ++a) row.push_back(rew(rng));
            per_state.push_back(row);
        }
        values.push_back(per_state);
    }
    cfg.reward_spec = {{"kind", "table"}, {"params", {{"values", values}}}};
    return io::build_finite(cfg);
}

io::InfiniteProblem d2_infinite(double t_max_override, double tail_epsilon) {
    io::ModelConfig cfg;
    cfg.mode = "inf";
    cfg.delay = 0.5;
    cfg.dt = 0.1;
    cfg.states = {Vec{0.0}};
    cfg.kernels = {Matrix(1, 1, 1.0)};
    cfg.menu = make_menu({Vec{1.0}}, {0.2});
    cfg.reward_spec = {{"kind", "linear_level"}, {"params", {{"c", {1.0}}}}};
    // large enough to bound the level even at a doubled truncation horizon
    cfg.gamma_bound = 150.0;
    cfg.rate = 1.0;
    cfg.tail_epsilon = tail_epsilon;
    cfg.t_max = t_max_override;
    return io::build_infinite(cfg);
}

io::InfiniteProblem r3_infinite(std::uint64_t seed, double t_max_override) {
    io::ModelConfig cfg;
    cfg.mode = "inf";
    cfg.delay = 0.25;
    cfg.dt = 0.125;
    cfg.states = {Vec{-1.0}, Vec{0.0}, Vec{1.0}};
    {
        std::mt19937_64 rng(mix(seed));
        cfg.kernels = {random_kernel(3, rng)};
        std::uniform_real_distribution<double> cost(0.05, 0.2);
        cfg.menu = make_menu({Vec{0.5}, Vec{-0.5}}, {cost(rng), cost(rng)});
    }
    cfg.gamma_bound = 1.0;
    cfg.rate = 1.0;
    cfg.tail_epsilon = 1e-4;
    cfg.t_max = t_max_override;
    cfg.initial_distribution = {0.3, 0.4, 0.3};

    // build once without the table to learn the grid and lattice sizes
    cfg.reward_spec = {{"kind", "linear_level"}, {"params", {{"c", {0.0}}}}};
    io::InfiniteProblem probe = io::build_infinite(cfg);

    // per-(time, state) seeding keeps the table consistent across horizons
    // and lattice sizes, so a doubled truncation sees the same reward process
    io::json values = io::json::array();
    for (int i = 0; i < probe.grid.steps; ++i) {
        io::json per_state = io::json::array();
        for (int s = 0; s < 3; ++s) {
            std::mt19937_64 rng(mix(seed ^ mix(0xabc0 + static_cast<std::uint64_t>(i)) ^
                                    mix(0x5150 + static_cast<std::uint64_t>(s))));
            std::uniform_real_distribution<double> rew(-1.0, 1.0);
            io::json row = io::json::array();
            for (int a = 0; a < probe.lat.size(); ++a) row.push_back(rew(rng));
            per_state.push_back(row);
        }
        values.push_back(per_state);
    }
    cfg.reward_spec = {{"kind", "table"}, {"params", {{"values", values}}}};
    return io::build_infinite(cfg);
}

swing::SwingConfig swing_small_config() {
    swing::SwingConfig cfg;
    cfg.spot0 = 1.0;
    cfg.sigma = 0.25;
    cfg.drift = 0.0;
    cfg.horizon = 1.0;
    cfg.dt = 0.125;
    cfg.refraction = 0.25;
    cfg.rights = 2;
    cfg.cost_per_exercise = 0.01;
    cfg.volume_increment = 1.0;
    cfg.layers = {{1.0, 1.0, 1.0}, {2.0, 2.0, 1.05}};
    return cfg;
}

swing::SwingProblem swing_small() { return swing::build(swing_small_config()); }

}  // namespace impulse::fixtures
