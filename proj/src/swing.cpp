#include "impulse/swing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace impulse::swing {

SwingProblem build(const SwingConfig& cfg) {
    require(cfg.rights >= 1, Errc::BadConfig, "swing needs at least one right");
    require(!cfg.layers.empty(), Errc::BadConfig, "swing needs at least one layer");
    require(cfg.sigma >= 0.0, Errc::BadConfig, "volatility must be nonnegative");

    SwingProblem p;
    p.grid = build_time_grid(cfg.horizon, cfg.refraction, cfg.dt);
    const int N = p.grid.steps;

    // recombining binomial chain on (spot, 0); the volume coordinate is only
    // moved by impulses
    if (cfg.sigma == 0.0) {
        require(cfg.drift == 0.0, Errc::BadConfig,
                "deterministic spot supports zero drift only");
        p.model.states = {Vec{cfg.spot0, 0.0}};
        p.model.kernels = {Matrix(1, 1, 1.0)};
        p.spot_states = 1;
    } else {
        const double u = std::exp(cfg.sigma * std::sqrt(cfg.dt));
        const double dn = 1.0 / u;
        const double pu = (std::exp(cfg.drift * cfg.dt) - dn) / (u - dn);
        require(pu > 0.0 && pu < 1.0, Errc::BadConfig,
                "binomial up-probability outside (0, 1); shrink dt");
        const int S = 2 * N + 1;
        p.spot_states = S;
        p.model.states.resize(S);
        for (int m = -N; m <= N; ++m)
            p.model.states[m + N] = Vec{cfg.spot0 * std::pow(u, m), 0.0};
        Matrix k(S, S, 0.0);
        for (int m = -N; m <= N; ++m) {
            const int r = m + N;
            if (m == N || m == -N) {
                k(r, r) = 1.0;  // only reachable at the horizon
                continue;
            }
            k(r, r + 1) = pu;
            k(r, r - 1) = 1.0 - pu;
        }
        p.model.kernels = {std::move(k)};
    }
    p.model.grid = p.grid;
    p.model.initial_dist.assign(p.model.states.size(), 0.0);
    p.model.initial_dist[p.model.states.size() / 2] = 1.0;

    std::vector<Vec> items{Vec{0.0, cfg.volume_increment}};
    p.menu = make_menu(std::move(items), {cfg.cost_per_exercise});

    const int depth = std::min(cfg.rights, p.grid.max_impulses);
    p.lat = build_cumulative_lattice(p.menu, depth);

    io::json spec;
    spec["kind"] = "swing";
    spec["params"]["layers"] = io::json::array();
    for (const auto& l : cfg.layers)
        spec["params"]["layers"].push_back(
            {{"up_to", l.up_to}, {"rate", l.rate}, {"strike", l.strike}});
    p.model.reward = io::build_reward(spec);

    // tight declared bound on |g| over every reachable shifted state
    double bound = 0.0;
    for (const auto& st : p.model.states)
        for (int a = 0; a < p.lat.size(); ++a) {
            Vec x = st;
            x[0] += p.lat.value(a)[0];
            x[1] += p.lat.value(a)[1];
            bound = std::max(bound, std::abs(p.model.reward.fn(0.0, x)));
        }
    p.model.gamma_bound = bound * (1.0 + 1e-12) + 1e-12;
    p.model.validate(p.lat);
    return p;
}

SwingConfig parse_swing_config(const io::json& doc) {
    require(doc.contains("schema") && doc["schema"].get<int>() == 1, Errc::BadConfig,
            "swing config requires \"schema\": 1");
    require(doc.contains("swing") && doc["swing"].is_object(), Errc::BadConfig,
            "swing config requires a swing object");
    const io::json& s = doc["swing"];
    SwingConfig cfg;
    cfg.spot0 = s.at("spot0").get<double>();
    cfg.sigma = s.at("sigma").get<double>();
    if (s.contains("drift")) cfg.drift = s["drift"].get<double>();
    cfg.horizon = s.at("T").get<double>();
    cfg.dt = s.at("dt").get<double>();
    cfg.refraction = s.at("refraction").get<double>();
    cfg.rights = s.at("rights").get<int>();
    if (s.contains("cost_per_exercise"))
        cfg.cost_per_exercise = s["cost_per_exercise"].get<double>();
    if (s.contains("volume_increment"))
        cfg.volume_increment = s["volume_increment"].get<double>();
    for (const auto& l : s.at("layers"))
        cfg.layers.push_back({l.at("up_to").get<double>(), l.at("rate").get<double>(),
                              l.at("strike").get<double>()});
    return cfg;
}

PriceResult price(const SwingProblem& problem) {
    PriceResult r;
    r.report = rn::solve(problem.model, problem.menu, problem.lat);
    r.price = r.report.value;
    return r;
}

std::string boundary_csv(const SwingProblem& problem, const StrategyRule& rule) {
    std::ostringstream out;
    out << "level,a_id,time,spot_threshold\n";
    const TimeGrid& grid = problem.grid;
    for (int k = 1; k <= rule.levels; ++k) {
        for (std::size_t a = 0; a < rule.stop[k - 1].size(); ++a) {
            const auto& st = rule.stop[k - 1][a];
            if (st.empty()) continue;
            for (int i = 0; i <= grid.steps; ++i) {
                double threshold = std::numeric_limits<double>::quiet_NaN();
                for (std::size_t s = 0; s < st.cols(); ++s)
                    if (st(i, s)) {
                        threshold = problem.model.states[s][0];
                        break;  // states are sorted ascending in spot
                    }
                out << k << ',' << a << ',' << io::format_number(grid.time(i)) << ',';
                if (std::isfinite(threshold)) out << io::format_number(threshold);
                out << '\n';
            }
        }
    }
    return out.str();
}

}  // namespace impulse::swing
