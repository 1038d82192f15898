#pragma once

#include "diffres/graph.hpp"
#include "diffres/structured.hpp"

#include <numbers>
#include <string>

namespace diffres {

struct XorParams {
    int n_per = 100;
    double radius = 0.75;
};
struct MoonParams {
    int n_per = 500;
    double noise = 0.05;
};
struct CircleParams {
    int n_per = 500;
    double inner = 1.0;
    double outer = 2.0;
    double noise = 0.05;
};
struct SpiralParams {
    int n_per = 500;
    double a = 1.0;
    double b = 1.0;
    double theta_min = std::numbers::pi / 4.0;
    double theta_max = 7.0 * std::numbers::pi / 4.0;
    double noise = 0.1;
};

// Four disks; disks at (0,0) and (2,2) are class 0. Subset m holds rows [m n_per, (m+1) n_per).
PointSet gen_xor(Rng& rng, const XorParams& p = {});
StructuredDataset xor_structure(const PointSet& xor_points, int n_per = 100);
PointSet gen_moon(Rng& rng, const MoonParams& p = {});
PointSet gen_circle(Rng& rng, const CircleParams& p = {});
PointSet gen_spiral(Rng& rng, const SpiralParams& p = {});
PointSet gen_synthetic(const std::string& name, Rng& rng);

struct GraphDataset {
    SparseWeights adjacency;  // self-loops added, symmetrically normalized
    Matrix features;          // row-normalized
    std::vector<int> labels;
    std::vector<int> original_ids;
    long edge_count = 0;      // undirected edges without self-loops
    int zero_feature_rows = 0;

    int size() const { return adjacency.size(); }
    int num_classes() const;
};

struct GraphSplit {
    std::vector<int> train, val, test;
};

// Undirected closure, largest connected component, self-loops, normalization.
GraphDataset preprocess_graph(int n, const std::vector<std::pair<int, int>>& edges, const Matrix& features,
                              const std::vector<int>& labels);
GraphDataset load_graph_dataset(const std::string& edge_path, const std::string& feature_path,
                                const std::string& label_path);
void export_graph_dataset(const GraphDataset& ds, const std::string& edge_path, const std::string& feature_path,
                          const std::string& label_path);

GraphSplit sample_graph_split(const std::vector<int>& labels, Rng& rng, int n_train = 20, int n_val = 30);

struct SbmParams {
    int classes = 4;
    int n_per = 100;
    double p_in = 0.1;
    double p_out = 0.005;
    int feat_dim = 16;
    double mean_scale = 1.0;
    double feature_noise = 2.0;
};
GraphDataset gen_sbm(const SbmParams& p, Rng& rng);

// M = k l balls of diameter <= D_target with pairwise set distance >= L_target (unsquared).
StructuredDataset gen_structured_clusters(int k, int l, int d, int n_per, double D_target, double L_target, Rng& rng);

}  // namespace diffres
