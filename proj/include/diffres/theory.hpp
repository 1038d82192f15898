#pragma once

#include "diffres/diffusion.hpp"
#include "diffres/structured.hpp"

#include <optional>

namespace diffres {

enum class NormConvention { Unsquared, Squared };

struct StructuredStats {
    double D = 0.0;  // largest subset diameter
    double L = 0.0;  // smallest distance between two subsets
};

StructuredStats structured_stats(const StructuredDataset& ds, NormConvention conv = NormConvention::Unsquared);
std::vector<double> subset_diameters(const StructuredDataset& ds, NormConvention conv = NormConvention::Unsquared);

double separability_threshold(int m, int d);

// True if the subsets' projections on `dir` are pairwise disjoint intervals.
bool projections_disjoint(const StructuredDataset& ds, const Vector& dir);
// Exact angular sweep when d = 2; otherwise n_directions random unit directions.
std::optional<Vector> check_parallel_separable(const StructuredDataset& ds, int n_directions, Rng& rng);

struct FlowPiece {
    double t0 = 0.0, t1 = 0.0;
    std::vector<double> lambda;
    std::vector<double> b;
};

struct FlowSchedule {
    Vector w_star;
    Vector beta_star;
    std::vector<FlowPiece> pieces;
    // Target interval per class for the first coordinate; degenerate (a == b) for single points.
    std::vector<std::pair<double, double>> targets;
};

// One subset per point; labels in {0, 1}; `width` units per piece.
FlowSchedule construct_separating_flow(const Matrix& points, const std::vector<int>& labels, double c1, double c2,
                                       Rng& rng, int width = 1);
// Multi-point subsets; subset classes in {0, 1}.
FlowSchedule construct_separating_flow(const StructuredDataset& ds, double c1, double c2, Rng& rng);

Matrix apply_flow(const Matrix& points, const FlowSchedule& schedule);

struct SeparabilityResult {
    bool separable = false;
    Vector normal;          // w with w.x + offset > 0 for label 1
    double offset = 0.0;
    Vector witness_point;   // common point of both hulls when not separable
    double hull_distance = 0.0;
};

SeparabilityResult linear_separability(const Matrix& points, const std::vector<int>& labels);

struct RatioTrace {
    std::vector<int> step;
    std::vector<double> D, L, ratio;
    std::vector<std::vector<double>> diameters;  // per step, per subset
};

RatioTrace ratio_trace(const StructuredDataset& ds, const SparseWeights& w, double gamma, int steps,
                       NormConvention conv = NormConvention::Unsquared);

struct StabilityReport {
    double rho = 0.0;
    bool passes = false;
    double gershgorin_lower = 0.0;
    double gershgorin_upper = 0.0;
};

StabilityReport verify_stability(const SparseWeights& w, double gamma);

}  // namespace diffres
