#pragma once

#include "diffres/diffusion.hpp"

namespace diffres {

// y = x W^T + b for row-vector samples; weight is out x in.
struct Affine {
    Matrix weight;
    Vector bias;

    int in_dim() const { return static_cast<int>(weight.cols()); }
    int out_dim() const { return static_cast<int>(weight.rows()); }
    Matrix apply(const Matrix& x) const;
};

struct ResidualBlockParams {
    Affine fc1;
    Affine fc2;  // unused (empty) when the network drops FC2
};

struct Architecture {
    int feature_dim = 2;
    int num_classes = 2;
    int blocks = 1;
    bool use_fc2 = true;
    double dropout_rate = 0.0;
};

struct DiffResNetParams {
    Architecture arch;
    std::vector<ResidualBlockParams> blocks;
    Affine classifier;

    long parameter_count() const;
    Vector flatten() const;
    void assign(const Vector& flat);
    std::vector<std::pair<std::string, const Affine*>> named_maps() const;
    void validate() const;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
DiffResNetParams init_params(const Architecture& arch, Rng& rng);
DiffResNetParams zeros_like(const DiffResNetParams& p);

Matrix convection_forward(const Matrix& x, const ResidualBlockParams& block, bool use_fc2);

struct BlockCache {
    Matrix input;
    Matrix pre_activation;
    std::vector<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>> dropout_masks;
};

struct ForwardCache {
    std::vector<BlockCache> blocks;
    Matrix features;  // input to the classifier
    DiffusionConfig diffusion;
    const SparseWeights* weights = nullptr;
    std::uint64_t params_fingerprint = 0;
};

struct ForwardResult {
    Matrix logits;
    ForwardCache cache;
};

// Pass rng = nullptr for evaluation; train_mode with dropout requires an rng.
ForwardResult forward(const Matrix& x, const DiffResNetParams& params, const SparseWeights& w,
                      const DiffusionConfig& diff, Rng* rng, bool train_mode);

struct Gradients {
    DiffResNetParams params;
    Matrix input;
};

Gradients backward(const DiffResNetParams& params, const ForwardCache& cache, const Matrix& grad_logits);

std::uint64_t fingerprint(const DiffResNetParams& p);

}  // namespace diffres
