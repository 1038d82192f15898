#pragma once

#include "diffres/common.hpp"

#include "json.hpp"

#include <string>

namespace diffres {

struct ClaimReport {
    std::string claim;
    bool passed = false;
    nlohmann::json measured;
    nlohmann::json tolerances;
    std::string details;

    nlohmann::json to_json() const;
};

std::vector<std::string> claim_names();  // stability, oracle, theorem1, theorem2, prop1
ClaimReport run_claim(const std::string& name, std::uint64_t seed);

ClaimReport verify_stability_claim(std::uint64_t seed, int graphs = 100);
ClaimReport verify_oracle_claim(std::uint64_t seed, int graphs = 20);
ClaimReport verify_flow_claim(std::uint64_t seed, int instances = 50);
ClaimReport verify_separability_claim(std::uint64_t seed, int datasets = 20);
ClaimReport verify_collapse_claim(std::uint64_t seed);

// Least-squares fit of y against x; returns R^2.
double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y, double* slope = nullptr);

}  // namespace diffres
