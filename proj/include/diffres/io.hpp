#pragma once

#include "diffres/network.hpp"
#include "diffres/theory.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>

namespace diffres {

// Points CSV: x_1..x_d with an optional trailing integer "label" column (-1 = unlabeled).
PointSet read_points_csv(const std::string& path, bool has_label_column);
void write_points_csv(std::ostream& os, const PointSet& ps);

void write_weights_csv(std::ostream& os, const SparseWeights& w);
SparseWeights read_weights_csv(const std::string& path, int n);

nlohmann::json params_to_json(const DiffResNetParams& p);
DiffResNetParams params_from_json(const nlohmann::json& j);

void write_ratio_trace_csv(std::ostream& os, const RatioTrace& tr);

std::string config_hash(const nlohmann::json& config);

}  // namespace diffres
