// Command-line front door: model solving, swing pricing, verification suites
// and path simulation. Exit codes: 0 ok, 1 verification failure, 2 config or
// schema error, 3 solver error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "impulse/acceptance.hpp"
#include "impulse/fixtures.hpp"
#include "impulse/infinite_rn.hpp"
#include "impulse/lattice_rn.hpp"
#include "impulse/lattice_rs.hpp"
#include "impulse/lsmc.hpp"
#include "impulse/model_io.hpp"
#include "impulse/swing.hpp"

namespace fs = std::filesystem;
using namespace impulse;

namespace {

int run_solve(const std::string& config_path, std::string mode, const std::string& out_dir,
              double epsilon, double tmax) {
    io::ModelConfig cfg = io::load_config(config_path);
    if (!mode.empty()) cfg.mode = mode;
    if (epsilon > 0.0) cfg.tail_epsilon = epsilon;
    if (tmax > 0.0) cfg.t_max = tmax;
    fs::create_directories(out_dir);

    io::json report;
    if (cfg.mode == "rn") {
        io::FiniteProblem p = io::build_finite(cfg);
        const auto rep = rn::solve(p.model, p.menu, p.lat);
        report = io::report_to_json(rep, cfg);
        io::write_fields_csv(out_dir + "/fields.csv", rep.values, rep.obstacles);
        io::write_strategy_csv(out_dir + "/strategy.csv", rep.rule, p.grid);
    } else if (cfg.mode == "rs") {
        io::FiniteProblem p = io::build_finite(cfg);
        const auto rep = rs::solve(p.model, p.menu, p.lat, cfg.theta);
        report = io::report_to_json(rep, cfg);
        io::write_fields_csv(out_dir + "/fields.csv", rep.values, rep.obstacles);
        io::write_strategy_csv(out_dir + "/strategy.csv", rep.rule, p.grid);
    } else if (cfg.mode == "inf") {
        io::InfiniteProblem p = io::build_infinite(cfg);
        const auto rep = inf::inf_iterate(p.model, p.menu, p.lat, p.certificate, p.settings);
        report = io::report_to_json(rep, cfg);
        io::write_fields_csv(out_dir + "/fields.csv", {rep.y0, rep.limit}, {{}, rep.obstacle});
        io::write_strategy_csv(out_dir + "/strategy.csv", rep.rule, p.grid);
    } else {
        fail(Errc::BadConfig, "mode must be rn, rs or inf");
    }
    io::write_text_file(out_dir + "/report.json", report.dump(2) + "\n");
    std::printf("value %s (mode %s) -> %s\n", io::format_number(report["value"].get<double>()).c_str(),
                cfg.mode.c_str(), out_dir.c_str());
    return 0;
}

int run_price_swing(const std::string& config_path, const std::string& out_dir) {
    std::ifstream in(config_path);
    require(in.good(), Errc::BadConfig, "cannot open config file " + config_path);
    io::json doc;
    try {
        doc = io::json::parse(in);
    } catch (const io::json::parse_error& e) {
        fail(Errc::BadConfig, std::string("JSON parse error: ") + e.what());
    }
    const swing::SwingConfig cfg = swing::parse_swing_config(doc);
    const swing::SwingProblem problem = swing::build(cfg);
    const swing::PriceResult priced = swing::price(problem);

    fs::create_directories(out_dir);
    io::json report;
    report["schema"] = 1;
    report["mode"] = "swing";
    report["price"] = priced.price;
    report["rights"] = cfg.rights;
    report["level_values"] = priced.report.level_values;
    io::write_text_file(out_dir + "/report.json", report.dump(2) + "\n");
    io::write_text_file(out_dir + "/boundary.csv",
                        swing::boundary_csv(problem, priced.report.rule));
    io::write_strategy_csv(out_dir + "/strategy.csv", priced.report.rule, problem.grid);
    std::printf("swing price %s -> %s\n", io::format_number(priced.price).c_str(),
                out_dir.c_str());
    return 0;
}

int run_verify(const std::string& suite, std::uint64_t seed, const std::string& out_path) {
    const auto results = acceptance::run_suite(suite, seed);
    const bool ok = acceptance::print_results(results);
    if (!out_path.empty()) {
        io::json j = io::json::array();
        for (const auto& r : results)
            j.push_back({{"id", r.id},
                         {"name", r.name},
                         {"pass", r.pass},
                         {"detail", r.detail},
                         {"elapsed_s", r.elapsed_s}});
        io::write_text_file(out_path, j.dump(2) + "\n");
    }
    return ok ? 0 : 1;
}

int run_simulate(const std::string& config_path, int n_paths, std::uint64_t seed,
                 const std::string& out_path) {
    std::ifstream in(config_path);
    require(in.good(), Errc::BadConfig, "cannot open config file " + config_path);
    io::json doc;
    try {
        doc = io::json::parse(in);
    } catch (const io::json::parse_error& e) {
        fail(Errc::BadConfig, std::string("JSON parse error: ") + e.what());
    }
    require(doc.contains("schema") && doc["schema"].get<int>() == 1, Errc::BadConfig,
            "path config requires \"schema\": 1");
    require(doc.contains("grid") && doc.contains("paths"), Errc::BadConfig,
            "path config requires grid and paths objects");
    const io::json& g = doc["grid"];
    const TimeGrid grid = build_time_grid(g.at("T").get<double>(), g.at("delta").get<double>(),
                                          g.at("dt").get<double>());
    const io::json& ps = doc["paths"];
    lsmc::PathSpec spec;
    const std::string kind = ps.at("kind").get<std::string>();
    if (kind == "constant") {
        spec.kind = lsmc::PathSpec::Kind::Constant;
    } else if (kind == "gbm") {
        spec.kind = lsmc::PathSpec::Kind::Gbm;
        for (const auto& v : ps.at("mu")) spec.gbm_mu.push_back(v.get<double>());
        for (const auto& v : ps.at("sigma")) spec.gbm_sigma.push_back(v.get<double>());
    } else {
        fail(Errc::BadSpec, "simulate supports constant and gbm path kinds");
    }
    for (const auto& v : ps.at("x0")) spec.x0.push_back(v.get<double>());
    if (ps.contains("antithetic")) spec.antithetic = ps["antithetic"].get<bool>();

    const auto ens = lsmc::simulate_paths(spec, grid, n_paths, seed);
    lsmc::write_path_file(out_path, ens);
    std::printf("wrote %d paths to %s (seed %llu)\n", ens.n_paths, out_path.c_str(),
                static_cast<unsigned long long>(seed));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Impulse-control solver with execution delay"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", mode, suite = "all", out_file;
    std::uint64_t seed = 42;
    int n_paths = 1000;
    double epsilon = 0.0, tmax = 0.0;

    auto* solve = app.add_subcommand("solve", "solve a model config");
    solve->add_option("config", config_path, "model JSON")->required();
    solve->add_option("--mode", mode, "rn | rs | inf (default from config)");
    solve->add_option("--out", out_dir, "output directory");
    solve->add_option("--epsilon", epsilon, "truncation tail target (inf mode)");
    solve->add_option("--tmax", tmax, "truncation horizon override (inf mode)");

    auto* priceswing = app.add_subcommand("price-swing", "price a swing option preset");
    priceswing->add_option("config", config_path, "swing JSON")->required();
    priceswing->add_option("--out", out_dir, "output directory");

    auto* verify = app.add_subcommand("verify", "run verification suites");
    verify->add_option("--suite", suite, "oracle | invariants | mc | all");
    verify->add_option("--seed", seed, "base seed");
    verify->add_option("--out", out_file, "results JSON path");

    auto* simulate = app.add_subcommand("simulate", "generate a seeded path file");
    simulate->add_option("config", config_path, "path-spec JSON")->required();
    simulate->add_option("--paths", n_paths, "number of paths");
    simulate->add_option("--seed", seed, "seed");
    simulate->add_option("--out", out_file, "CSV output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return run_solve(config_path, mode, out_dir, epsilon, tmax);
        if (priceswing->parsed()) return run_price_swing(config_path, out_dir);
        if (verify->parsed()) return run_verify(suite, seed, out_file);
        if (simulate->parsed()) return run_simulate(config_path, n_paths, seed, out_file);
    } catch (const SolverError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return (e.code == Errc::BadConfig || e.code == Errc::BadSpec) ? 2 : 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
