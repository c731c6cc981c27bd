#pragma once

#include <string>
#include <vector>

#include "impulse/lattice_rn.hpp"
#include "impulse/model_io.hpp"

namespace impulse::swing {

// Swing-option preset: a commodity contract with multiple exercise rights
// separated by a refraction period. State is (spot, cumulative volume); each
// exercise swings the daily take up by volume_increment after the refraction
// lag, and the held volume accrues rate(v) (spot - strike(v)) per unit time
// with layered rates and strikes. Spot rides a recombining binomial chain.

struct Layer {
    double up_to = 0.0;
    double rate = 0.0;
    double strike = 0.0;
};

struct SwingConfig {
    double spot0 = 1.0;
    double sigma = 0.2;
    double drift = 0.0;
    double horizon = 1.0;
    double dt = 0.0;
    double refraction = 0.0;  // the execution delay
    int rights = 1;           // exercise-count cap
    double cost_per_exercise = 0.0;
    double volume_increment = 1.0;
    std::vector<Layer> layers;
};

struct SwingProblem {
    TimeGrid grid;
    CumulativeLattice lat;
    MarkovLattice model;
    ImpulseMenu menu;
    int spot_states = 0;
};

SwingProblem build(const SwingConfig& cfg);

SwingConfig parse_swing_config(const io::json& doc);

struct PriceResult {
    double price = 0.0;
    rn::SolveReport report;
};

PriceResult price(const SwingProblem& problem);

// exercise boundary: per (right, volume id, time) the lowest spot in the
// stopping region, one CSV row each
std::string boundary_csv(const SwingProblem& problem, const StrategyRule& rule);

}  // namespace impulse::swing
