#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace impulse::acceptance {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double elapsed_s = 0.0;
};

// suite: "oracle" | "invariants" | "mc" | "all"
std::vector<CriterionResult> run_suite(const std::string& suite, std::uint64_t seed = 42);

// one line per criterion on out; returns true when everything passed
bool print_results(const std::vector<CriterionResult>& results);

}  // namespace impulse::acceptance
