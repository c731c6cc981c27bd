#include "impulse/model_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace impulse::io {

namespace {

Vec as_vec(const json& j, const char* what) {
    require(j.is_array(), Errc::BadConfig, std::string(what) + " must be an array");
    Vec v;
    for (const auto& e : j) {
        require(e.is_number(), Errc::BadConfig, std::string(what) + " must hold numbers");
        v.push_back(e.get<double>());
    }
    return v;
}

Matrix as_matrix(const json& j, const char* what) {
    require(j.is_array() && !j.empty(), Errc::BadConfig,
            std::string(what) + " must be a nonempty 2-d array");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        require(j[r].is_array() && j[r].size() == cols, Errc::BadConfig,
                std::string(what) + " must be rectangular");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

}  // namespace

ModelConfig parse_config(const json& doc) {
    require(doc.is_object(), Errc::BadConfig, "top-level config must be an object");
    require(doc.contains("schema") && doc["schema"].is_number_integer() &&
                doc["schema"].get<int>() == 1,
            Errc::BadConfig, "config requires \"schema\": 1");

    ModelConfig cfg;
    if (doc.contains("mode")) cfg.mode = doc["mode"].get<std::string>();
    require(cfg.mode == "rn" || cfg.mode == "rs" || cfg.mode == "inf", Errc::BadConfig,
            "mode must be rn, rs or inf");

    require(doc.contains("grid") && doc["grid"].is_object(), Errc::BadConfig,
            "config requires a grid object");
    const json& g = doc["grid"];
    require(g.contains("delta") && g.contains("dt"), Errc::BadConfig,
            "grid requires delta and dt");
    cfg.delay = g["delta"].get<double>();
    cfg.dt = g["dt"].get<double>();
    if (g.contains("T")) cfg.horizon = g["T"].get<double>();
    require(cfg.mode == "inf" || cfg.horizon > 0.0, Errc::BadConfig,
            "finite-horizon configs require grid.T");

    require(doc.contains("states"), Errc::BadConfig, "config requires states");
    for (const auto& s : doc["states"]) cfg.states.push_back(as_vec(s, "state"));

    require(doc.contains("kernels") && doc["kernels"].is_array() && !doc["kernels"].empty(),
            Errc::BadConfig, "config requires at least one kernel");
    for (const auto& k : doc["kernels"]) cfg.kernels.push_back(as_matrix(k, "kernel"));

    require(doc.contains("menu") && doc["menu"].is_object(), Errc::BadConfig,
            "config requires a menu object");
    {
        std::vector<Vec> items;
        for (const auto& it : doc["menu"]["items"]) items.push_back(as_vec(it, "menu item"));
        std::vector<double> costs = as_vec(doc["menu"]["costs"], "menu costs");
        cfg.menu = make_menu(std::move(items), std::move(costs));
    }

    require(doc.contains("reward") && doc["reward"].is_object(), Errc::BadConfig,
            "config requires a reward object");
    cfg.reward_spec = doc["reward"];
    require(doc.contains("gamma_bound"), Errc::BadConfig, "config requires gamma_bound");
    cfg.gamma_bound = doc["gamma_bound"].get<double>();

    if (doc.contains("initial_distribution"))
        cfg.initial_distribution = as_vec(doc["initial_distribution"], "initial distribution");
    else if (doc.contains("initial_state"))
        cfg.initial_state = doc["initial_state"].get<int>();
    if (doc.contains("theta")) cfg.theta = doc["theta"].get<double>();
    if (doc.contains("max_impulses")) cfg.max_impulses = doc["max_impulses"].get<int>();

    if (cfg.mode == "inf") {
        require(doc.contains("discount") && doc["discount"].is_object(), Errc::BadConfig,
                "inf mode requires a discount object");
        const json& dsc = doc["discount"];
        require(dsc.contains("rate"), Errc::BadConfig, "discount requires a rate");
        cfg.rate = dsc["rate"].get<double>();
        if (dsc.contains("epsilon")) cfg.tail_epsilon = dsc["epsilon"].get<double>();
        if (dsc.contains("t_max")) cfg.t_max = dsc["t_max"].get<double>();
        if (dsc.contains("epsilon_fix")) cfg.epsilon_fix = dsc["epsilon_fix"].get<double>();
        if (dsc.contains("n_max")) cfg.n_max = dsc["n_max"].get<int>();
    }
    return cfg;
}

ModelConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), Errc::BadConfig, "cannot open config file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(Errc::BadConfig, std::string("JSON parse error: ") + e.what());
    }
    return parse_config(doc);
}

Reward build_reward(const json& spec) {
    const std::string kind = spec.at("kind").get<std::string>();
    // canonical layout nests the payload under "params"; flat keys are
    // accepted for hand-written configs
    const json& body = spec.contains("params") ? spec["params"] : spec;
    Reward reward;
    if (kind == "table") {
        for (const auto& per_time : body.at("values")) {
            std::vector<std::vector<double>> per_state;
            for (const auto& row : per_time) per_state.push_back(as_vec(row, "reward table row"));
            reward.table.push_back(std::move(per_state));
        }
    } else if (kind == "linear_level") {
        Vec c = as_vec(body.at("c"), "linear reward coefficients");
        reward.fn = [c](double, const Vec& x) {
            double v = 0.0;
            for (std::size_t i = 0; i < c.size() && i < x.size(); ++i) v += c[i] * x[i];
            return v;
        };
    } else if (kind == "swing") {
        struct Layer {
            double up_to, rate, strike;
        };
        std::vector<Layer> layers;
        for (const auto& l : body.at("layers"))
            layers.push_back({l.at("up_to").get<double>(), l.at("rate").get<double>(),
                              l.at("strike").get<double>()});
        require(!layers.empty(), Errc::BadConfig, "swing reward requires layers");
        for (std::size_t i = 1; i < layers.size(); ++i)
            require(layers[i].up_to > layers[i - 1].up_to, Errc::BadConfig,
                    "swing layers must have increasing up_to");
        // state = (spot, cumulative volume); the whole held volume accrues at
        // the layer its total falls in
        reward.fn = [layers](double, const Vec& x) {
            require(x.size() >= 2, Errc::BadModel, "swing reward needs (spot, volume) states");
            const double spot = x[0];
            const double v = x[1];
            if (v <= 1e-12) return 0.0;
            const Layer* active = &layers.back();
            for (const auto& l : layers)
                if (v <= l.up_to + 1e-9) {
                    active = &l;
                    break;
                }
            return active->rate * (spot - active->strike);
        };
    } else {
        fail(Errc::BadConfig, "unknown reward kind " + kind);
    }
    return reward;
}

namespace {

MarkovLattice assemble_model(const ModelConfig& cfg, const TimeGrid& grid) {
    MarkovLattice model;
    model.grid = grid;
    model.states = cfg.states;
    model.kernels = cfg.kernels;
    model.reward = build_reward(cfg.reward_spec);
    model.gamma_bound = cfg.gamma_bound;
    if (!cfg.initial_distribution.empty()) {
        model.initial_dist = cfg.initial_distribution;
    } else {
        require(cfg.initial_state >= 0 && cfg.initial_state < static_cast<int>(cfg.states.size()),
                Errc::BadConfig, "initial_state out of range");
        model.initial_dist.assign(cfg.states.size(), 0.0);
        model.initial_dist[cfg.initial_state] = 1.0;
    }
    return model;
}

}  // namespace

FiniteProblem build_finite(const ModelConfig& cfg) {
    FiniteProblem p;
    p.grid = build_time_grid(cfg.horizon, cfg.delay, cfg.dt);
    const int depth = cfg.max_impulses > 0 ? std::min(cfg.max_impulses, p.grid.max_impulses)
                                           : p.grid.max_impulses;
    p.menu = cfg.menu;
    p.lat = build_cumulative_lattice(p.menu, depth);
    p.model = assemble_model(cfg, p.grid);
    p.model.validate(p.lat);
    return p;
}

InfiniteProblem build_infinite(const ModelConfig& cfg) {
    InfiniteProblem p;
    p.certificate = inf::choose_truncation(cfg.rate, cfg.gamma_bound, cfg.tail_epsilon, cfg.dt,
                                           cfg.delay);
    double t = std::max(p.certificate.t_trunc, cfg.delay + cfg.dt);
    if (cfg.t_max > 0.0) {
        t = std::ceil(cfg.t_max / cfg.dt - 1e-12) * cfg.dt;
        p.certificate.t_trunc = t;
        p.certificate.tail_bound = cfg.gamma_bound * std::exp(-cfg.rate * t) / cfg.rate;
    }
    p.grid = build_time_grid(t, cfg.delay, cfg.dt);
    const int cap = static_cast<int>(std::ceil(p.certificate.t_trunc / cfg.delay - 1e-12));
    p.menu = cfg.menu;
    p.lat = build_cumulative_lattice(p.menu, cap + 1);
    p.model = assemble_model(cfg, p.grid);
    p.model.validate(p.lat);
    p.settings.rate = cfg.rate;
    p.settings.epsilon_fix = cfg.epsilon_fix;
    p.settings.n_max = cfg.n_max;
    p.settings.depth_cap = cap;
    return p;
}

std::string format_number(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

json strategy_summary(const StrategyRule& rule, const TimeGrid& grid) {
    json levels = json::array();
    const int n_levels = rule.stationary ? 1 : rule.levels;
    for (int k = 1; k <= n_levels; ++k) {
        int nodes = 0;
        int first = -1;
        for (std::size_t a = 0; a < rule.stop[k - 1].size(); ++a) {
            const auto& st = rule.stop[k - 1][a];
            if (st.empty()) continue;
            for (std::size_t i = 0; i < st.rows(); ++i)
                for (std::size_t s = 0; s < st.cols(); ++s)
                    if (st(i, s)) {
                        ++nodes;
                        if (first < 0 || static_cast<int>(i) < first) first = static_cast<int>(i);
                    }
        }
        json entry;
        entry["level"] = k;
        entry["stopping_nodes"] = nodes;
        entry["earliest_stop_time"] = first < 0 ? json() : json(grid.time(first));
        levels.push_back(entry);
    }
    return levels;
}

}  // namespace

json report_to_json(const rn::SolveReport& rep, const ModelConfig& cfg) {
    json j;
    j["schema"] = 1;
    j["mode"] = "rn";
    j["value"] = rep.value;
    j["level_values"] = rep.level_values;
    json diag = json::array();
    for (std::size_t n = 1; n < rep.diagnostics.size(); ++n) {
        json e;
        e["level"] = n;
        e["restriction_gap"] = rep.diagnostics[n].restriction_gap;
        e["monotone_residual"] = rep.diagnostics[n].monotone_residual;
        diag.push_back(e);
    }
    j["diagnostics"] = diag;
    j["strategy"] = strategy_summary(rep.rule, TimeGrid{cfg.horizon, cfg.delay, cfg.dt,
                                                        rep.rule.steps, rep.rule.delay_steps, 0});
    return j;
}

json report_to_json(const rs::SolveReport& rep, const ModelConfig& cfg) {
    json j;
    j["schema"] = 1;
    j["mode"] = "risk-sensitive";
    j["value"] = rep.value;
    j["theta"] = rep.theta;
    j["log_space"] = rep.log_space;
    j["level_values"] = rep.level_values;
    j["strategy"] = strategy_summary(rep.rule, TimeGrid{cfg.horizon, cfg.delay, cfg.dt,
                                                        rep.rule.steps, rep.rule.delay_steps, 0});
    return j;
}

json report_to_json(const inf::FixedPointReport& rep, const ModelConfig& cfg) {
    json j;
    j["schema"] = 1;
    j["mode"] = "inf";
    j["value"] = rep.value;
    j["T_trunc"] = rep.certificate.t_trunc;
    j["tail_bound"] = rep.certificate.tail_bound;
    j["iterations"] = rep.iterations;
    j["residuals"] = rep.residuals;
    j["depth_cap"] = rep.depth_cap;
    j["beyond_cap_reads"] = rep.beyond_cap_reads;
    j["strategy"] = strategy_summary(rep.rule, TimeGrid{cfg.t_max, cfg.delay, cfg.dt,
                                                        rep.rule.steps, rep.rule.delay_steps, 0});
    return j;
}

void write_fields_csv(const std::string& path, const std::vector<ValueField>& values,
                      const std::vector<ObstacleField>& obstacles) {
    std::ofstream out(path);
    require(out.good(), Errc::BadConfig, "cannot write " + path);
    out << "level,a_id,i,state,Y,O\n";
    for (std::size_t n = 0; n < values.size(); ++n) {
        const ValueField& v = values[n];
        for (std::size_t a = 0; a < v.per_a.size(); ++a) {
            if (!v.has(static_cast<int>(a))) continue;
            const Matrix& y = v.at(static_cast<int>(a));
            const bool has_o = n < obstacles.size() && obstacles[n].has(static_cast<int>(a));
            for (std::size_t i = 0; i < y.rows(); ++i)
                for (std::size_t s = 0; s < y.cols(); ++s) {
                    out << v.level << ',' << a << ',' << i << ',' << s << ','
                        << format_number(y(i, s)) << ',';
                    if (has_o) out << format_number(obstacles[n].at(static_cast<int>(a))(i, s));
                    out << '\n';
                }
        }
    }
}

void write_strategy_csv(const std::string& path, const StrategyRule& rule, const TimeGrid& grid) {
    std::ofstream out(path);
    require(out.good(), Errc::BadConfig, "cannot write " + path);
    out << "level,a_id,time,state,action,size\n";
    const int n_levels = rule.stationary ? 1 : rule.levels;
    for (int k = 1; k <= n_levels; ++k) {
        for (std::size_t a = 0; a < rule.stop[k - 1].size(); ++a) {
            const auto& st = rule.stop[k - 1][a];
            const auto& sz = rule.size[k - 1][a];
            if (st.empty()) continue;
            for (std::size_t i = 0; i < st.rows(); ++i)
                for (std::size_t s = 0; s < st.cols(); ++s) {
                    if (st(i, s))
                        out << k << ',' << a << ',' << format_number(grid.time(i)) << ',' << s
                            << ",stop,\n";
                    out << k << ',' << a << ',' << format_number(grid.time(i)) << ',' << s
                        << ",exec," << sz(i, s) << '\n';
                }
        }
    }
}

StrategyRule read_strategy_csv(const std::string& path, const TimeGrid& grid, int n_a,
                               int n_states, int levels, bool stationary) {
    std::ifstream in(path);
    require(in.good(), Errc::BadConfig, "cannot read " + path);
    StrategyRule rule;
    rule.levels = levels;
    rule.steps = grid.steps;
    rule.delay_steps = grid.delay_steps;
    rule.stationary = stationary;
    const int n_levels = stationary ? 1 : levels;
    rule.stop.assign(n_levels, std::vector<Table<unsigned char>>(n_a));
    rule.size.assign(n_levels, std::vector<Table<int>>(n_a));

    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[6];
        for (int c = 0; c < 6; ++c) std::getline(ss, f[c], ',');
        const int k = std::stoi(f[0]);
        const int a = std::stoi(f[1]);
        const double t = std::stod(f[2]);
        const int s = std::stoi(f[3]);
        const int i = time_to_index(grid, t);
        require(k >= 1 && k <= n_levels && a >= 0 && a < n_a && s >= 0 && s < n_states,
                Errc::BadConfig, "strategy row out of range");
        auto& stop = rule.stop[k - 1][a];
        auto& size = rule.size[k - 1][a];
        if (stop.empty()) {
            stop = Table<unsigned char>(grid.steps + 1, n_states, 0);
            size = Table<int>(grid.steps + 1, n_states, 0);
        }
        if (f[4] == "stop")
            stop(i, s) = 1;
        else if (f[4] == "exec")
            size(i, s) = std::stoi(f[5]);
        else
            fail(Errc::BadConfig, "unknown strategy action " + f[4]);
    }
    return rule;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    require(out.good(), Errc::BadConfig, "cannot write " + path);
    out << content;
}

}  // namespace impulse::io
