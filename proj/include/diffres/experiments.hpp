#pragma once

#include "diffres/datasets.hpp"
#include "diffres/fewshot.hpp"
#include "diffres/trainer.hpp"

#include <map>
#include <string>

namespace diffres {

struct SyntheticSpec {
    std::string dataset = "circle";
    int n_top = 50;
    double sigma = 0.5;
    double gamma = 1.0;
    int steps = 200;
    int blocks = 1;
    int epochs = 30;
    SgdConfig sgd{1.0, 0.9, 5e-4};
    StepPolicy policy = StepPolicy::KeepStrength;
    int batch_size = 0;  // 0 = full batch
    SpiralParams spiral;  // used when dataset == "spiral"
};

// Per-dataset defaults (xor, moon, circle, spiral).
SyntheticSpec default_synthetic_spec(const std::string& dataset);

struct SyntheticOutcome {
    PointSet data;
    SparseWeights weights;
    DiffusionConfig diffusion;  // after the step policy
    TrainResult result;
};

SyntheticOutcome run_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

struct GraphSpec {
    int steps = 20;
    double gamma = 0.25;
    double dropout = 0.25;
    int blocks = 1;
    int epochs = 200;
    SgdConfig sgd{0.1, 0.9, 5e-4};
    int n_train = 20;
    int n_val = 30;
    StepPolicy policy = StepPolicy::KeepStrength;
};

struct GraphRunOutcome {
    double test_acc = 0.0;
    double val_acc = 0.0;
    DiffusionConfig diffusion;
};

GraphRunOutcome run_graph(const GraphDataset& ds, const GraphSpec& spec, std::uint64_t split_seed, std::uint64_t init_seed);

struct FewShotSpec {
    BankParams bank;
    int n_way = 5;
    int k_shot = 1;
    int n_query = 15;
    int episodes = 200;
    std::vector<Method> methods{Method::NearestPrototype, Method::Diffusion, Method::Convection, Method::ExternalCD,
                                Method::InternalCD};
    FewShotConfig cfg;
};

struct FewShotRecord {
    int episode = 0;
    Method method = Method::NearestPrototype;
    double accuracy = 0.0;
    std::vector<int> predictions;
};

struct FewShotOutcome {
    std::vector<FewShotRecord> records;
    std::map<Method, Summary> summary;
    std::vector<Episode> episodes;
};

// Bank seeded by `seed`, episodes drawn from it; every method sees the same episodes and init seeds.
FewShotOutcome run_fewshot(const FewShotSpec& spec, std::uint64_t seed, const FeatureBank* bank = nullptr);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace diffres
