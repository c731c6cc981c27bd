#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "impulse/cumulative_lattice.hpp"
#include "impulse/infinite_rn.hpp"
#include "impulse/lattice_rn.hpp"
#include "impulse/lattice_rs.hpp"
#include "impulse/markov_lattice.hpp"
#include "impulse/strategy.hpp"

namespace impulse::io {

using nlohmann::json;

// Parsed model document (schema 1). Numbers are 64-bit floats end to end.
struct ModelConfig {
    std::string mode = "rn";  // rn | rs | inf
    double horizon = 0.0;     // optional for inf (truncation decides)
    double delay = 0.0;
    double dt = 0.0;
    std::vector<Vec> states;
    std::vector<Matrix> kernels;
    ImpulseMenu menu;
    json reward_spec;
    double gamma_bound = 0.0;
    int initial_state = 0;
    std::vector<double> initial_distribution;
    double theta = 1.0;
    int max_impulses = -1;  // optional cap on rights, else floor(T / delay)
    // infinite-horizon block
    double rate = 0.0;
    double tail_epsilon = 1e-6;
    double t_max = 0.0;       // optional truncation override
    double epsilon_fix = 1e-8;
    int n_max = 0;
};

ModelConfig parse_config(const json& doc);
ModelConfig load_config(const std::string& path);

Reward build_reward(const json& reward_spec);

struct FiniteProblem {
    TimeGrid grid;
    CumulativeLattice lat;
    MarkovLattice model;
    ImpulseMenu menu;
};
FiniteProblem build_finite(const ModelConfig& cfg);

struct InfiniteProblem {
    TimeGrid grid;
    CumulativeLattice lat;
    MarkovLattice model;
    ImpulseMenu menu;
    inf::TruncationCertificate certificate;
    inf::IterationSettings settings;
};
InfiniteProblem build_infinite(const ModelConfig& cfg);

// shortest round-trip decimal for doubles
std::string format_number(double v);

json report_to_json(const rn::SolveReport& rep, const ModelConfig& cfg);
json report_to_json(const rs::SolveReport& rep, const ModelConfig& cfg);
json report_to_json(const inf::FixedPointReport& rep, const ModelConfig& cfg);

// fields.csv: level,a_id,i,state,Y,O (O blank on level 0)
void write_fields_csv(const std::string& path, const std::vector<ValueField>& values,
                      const std::vector<ObstacleField>& obstacles);

// strategy.csv: level,a_id,time,state,action,size with action in {stop, exec}
void write_strategy_csv(const std::string& path, const StrategyRule& rule, const TimeGrid& grid);
StrategyRule read_strategy_csv(const std::string& path, const TimeGrid& grid, int n_a,
                               int n_states, int levels, bool stationary);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace impulse::io
