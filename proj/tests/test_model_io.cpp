#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "impulse/fixtures.hpp"
#include "impulse/oracle.hpp"
#include "impulse/infinite_rn.hpp"
#include "impulse/lattice_rn.hpp"
#include "impulse/lattice_rs.hpp"
#include "impulse/model_io.hpp"
#include "impulse/swing.hpp"

using namespace impulse;
namespace fs = std::filesystem;

namespace {

io::json d1_doc() {
    return io::json{{"schema", 1},
                    {"mode", "rn"},
                    {"grid", {{"T", 1.0}, {"delta", 0.4}, {"dt", 0.1}}},
                    {"states", {{0.0}}},
                    {"kernels", {{{1.0}}}},
                    {"menu", {{"items", {{1.0}}}, {"costs", {0.1}}}},
                    {"reward", {{"kind", "linear_level"}, {"c", {1.0}}}},
                    {"gamma_bound", 2.0}};
}

fs::path temp_file(const char* name) {
    return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("config parsing round-trips the D1 document") {
    const auto cfg = io::parse_config(d1_doc());
    const auto p = io::build_finite(cfg);
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    CHECK(rep.value == doctest::Approx(0.6).epsilon(1e-13));
}

TEST_CASE("schema violations are rejected with the config error code") {
    auto no_schema = d1_doc();
    no_schema.erase("schema");
    CHECK_THROWS_AS(io::parse_config(no_schema), SolverError);

    auto bad_mode = d1_doc();
    bad_mode["mode"] = "xx";
    CHECK_THROWS_AS(io::parse_config(bad_mode), SolverError);

    auto no_menu = d1_doc();
    no_menu.erase("menu");
    try {
        io::parse_config(no_menu);
        CHECK(false);
    } catch (const SolverError& e) {
        CHECK(e.code == Errc::BadConfig);
    }

    auto no_T = d1_doc();
    no_T["grid"].erase("T");
    CHECK_THROWS_AS(io::parse_config(no_T), SolverError);
}

TEST_CASE("numbers are written in shortest round-trip form") {
    CHECK(io::format_number(0.1) == "0.1");
    CHECK(io::format_number(1.0) == "1");
    CHECK(std::stod(io::format_number(0.6000000000000001)) == 0.6000000000000001);
    CHECK(std::stod(io::format_number(std::exp(0.6))) == std::exp(0.6));
}

TEST_CASE("strategy CSV round-trips and replays the solver value") {
    const auto p = fixtures::r3(42);
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    const auto path = temp_file("impulse_strategy_rt.csv");
    io::write_strategy_csv(path.string(), rep.rule, p.grid);
    const auto rule = io::read_strategy_csv(path.string(), p.grid, p.lat.size(), 3,
                                            rep.rule.levels, false);
    const double replay = rn::evaluate_strategy_exact(rule, p.model, p.lat, p.menu);
    CHECK(replay == doctest::Approx(rep.value).epsilon(1e-12));
    fs::remove(path);
}

TEST_CASE("risk-sensitive strategy CSV round-trip") {
    const auto p = fixtures::r3(14);
    const auto rep = rs::solve(p.model, p.menu, p.lat);
    const auto path = temp_file("impulse_strategy_rs.csv");
    io::write_strategy_csv(path.string(), rep.rule, p.grid);
    const auto rule = io::read_strategy_csv(path.string(), p.grid, p.lat.size(), 3,
                                            rep.rule.levels, false);
    const double replay = rs::evaluate_strategy_exact(rule, p.model, p.lat, p.menu);
    CHECK(replay == doctest::Approx(rep.value).epsilon(1e-12));
    fs::remove(path);
}

TEST_CASE("infinite-horizon strategy CSV round-trip within the iteration slack") {
    const auto p = fixtures::d2_infinite();
    const auto rep = inf::inf_iterate(p.model, p.menu, p.lat, p.certificate, p.settings);
    const auto path = temp_file("impulse_strategy_inf.csv");
    io::write_strategy_csv(path.string(), rep.rule, p.grid);
    const auto rule =
        io::read_strategy_csv(path.string(), p.grid, p.lat.size(), 1, 1, true);
    const double replay = inf::evaluate_strategy(rule, p.model, p.lat, p.menu, 1.0);
    CHECK(std::abs(replay - rep.value) <=
          p.settings.epsilon_fix + 2.0 * p.certificate.tail_bound);
    fs::remove(path);
}

TEST_CASE("report JSON carries the headline value and diagnostics") {
    const auto cfg = io::parse_config(d1_doc());
    const auto p = io::build_finite(cfg);
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    const auto j = io::report_to_json(rep, cfg);
    CHECK(j["schema"] == 1);
    CHECK(j["mode"] == "rn");
    CHECK(j["value"].get<double>() == doctest::Approx(0.6));
    CHECK(j["level_values"].size() == 3);
    CHECK(j["strategy"].size() == 2);
}

TEST_CASE("fields CSV lists every computed node") {
    const auto p = fixtures::d1();
    const auto rep = rn::solve(p.model, p.menu, p.lat);
    const auto path = temp_file("impulse_fields.csv");
    io::write_fields_csv(path.string(), rep.values, rep.obstacles);
    std::ifstream in(path.string());
    std::string line;
    std::getline(in, line);
    CHECK(line == "level,a_id,i,state,Y,O");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    // level 0: 5 ids, level 1: 2 ids, level 2: 1 id; 11 time rows each
    CHECK(rows == (3 + 2 + 1) * 11);
    fs::remove(path);
}

TEST_CASE("swing pricing: flat layers with a zero increment price to zero") {
    swing::SwingConfig cfg = fixtures::swing_small_config();
    cfg.volume_increment = 0.0;
    cfg.cost_per_exercise = 0.0;
    cfg.layers = {{2.0, 1.0, 1.0}};
    const auto problem = swing::build(cfg);
    const auto priced = swing::price(problem);
    CHECK(priced.price == doctest::Approx(0.0));
}

TEST_CASE("deterministic swing prices match the schedule enumeration") {
    swing::SwingConfig cfg;
    cfg.spot0 = 2.0;  // strike + 1
    cfg.sigma = 0.0;
    cfg.drift = 0.0;
    cfg.horizon = 1.0;
    cfg.dt = 0.125;
    cfg.refraction = 0.25;
    cfg.rights = 2;
    cfg.cost_per_exercise = 0.05;
    cfg.volume_increment = 1.0;
    cfg.layers = {{2.0, 1.0, 1.0}};
    const auto problem = swing::build(cfg);
    const auto priced = swing::price(problem);
    const auto oracle_sol = oracle::enumerate_deterministic(problem.model, problem.lat,
                                                            problem.menu, Mode::RiskNeutral);
    CHECK(priced.price == doctest::Approx(oracle_sol.value).epsilon(1e-12));
    // one unit held from 0.25 pays (2 - 1) for 0.75 time units; the second
    // right adds nothing because the rate is flat in the volume
    CHECK(priced.price == doctest::Approx(0.75 - 0.05).epsilon(1e-12));
}

TEST_CASE("swing prices are nondecreasing in the number of rights") {
    swing::SwingConfig cfg = fixtures::swing_small_config();
    double last = -1.0;
    for (int rights = 1; rights <= 3; ++rights) {
        cfg.rights = rights;
        const auto priced = swing::price(swing::build(cfg));
        CHECK(priced.price >= last - 1e-12);
        last = priced.price;
    }
}

TEST_CASE("swing boundary CSV exposes the threshold structure") {
    const auto problem = fixtures::swing_small();
    const auto priced = swing::price(problem);
    const auto csv = swing::boundary_csv(problem, priced.report.rule);
    CHECK(csv.rfind("level,a_id,time,spot_threshold\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') > 10);
}
