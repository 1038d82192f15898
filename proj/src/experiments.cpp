#include "diffres/experiments.hpp"

#include <cmath>

namespace diffres {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

SyntheticSpec default_synthetic_spec(const std::string& dataset) {
    SyntheticSpec s;
    s.dataset = dataset;
    if (dataset == "xor") {
        s.n_top = 20;
        s.steps = 20;
    } else if (dataset == "moon") {
        s.n_top = 25;
        s.steps = 60;
    } else if (dataset == "circle") {
        s.n_top = 50;
        s.steps = 200;
    } else if (dataset == "spiral") {
        s.n_top = 25;
        s.steps = 900;
        s.epochs = 60;
        s.sgd.lr = 0.8;
    } else {
        throw Error("unknown synthetic dataset '" + dataset + "'");
    }
    return s;
}

SyntheticOutcome run_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    SyntheticOutcome out;
    Rng data_rng(derive_seed(seed, 0));
    out.data = spec.dataset == "spiral" ? gen_spiral(data_rng, spec.spiral) : gen_synthetic(spec.dataset, data_rng);
    out.weights = build_weight_matrix(out.data.coords, spec.n_top, FixedSigma{spec.sigma});
    out.diffusion = resolve_step(out.weights, spec.gamma, spec.steps, spec.policy);

    TrainConfig tc;
    tc.epochs = spec.epochs;
    tc.sgd = spec.sgd;
    tc.diffusion = out.diffusion;
    tc.seed = derive_seed(seed, 2);
    tc.batch_size = spec.batch_size;
    Architecture arch{out.data.dim(), out.data.num_classes(), spec.blocks, true, 0.0};
    Rng init_rng(derive_seed(seed, 1));
    out.result = train(out.data.coords, out.data.labels, out.weights, init_params(arch, init_rng), tc);
    return out;
}

GraphRunOutcome run_graph(const GraphDataset& ds, const GraphSpec& spec, std::uint64_t split_seed, std::uint64_t init_seed) {
    Rng split_rng(split_seed);
    GraphSplit split = sample_graph_split(ds.labels, split_rng, spec.n_train, spec.n_val);
    GraphRunOutcome out;
    out.diffusion = resolve_step(ds.adjacency, spec.gamma, spec.steps, spec.policy);

    TrainConfig tc;
    tc.epochs = spec.epochs;
    tc.sgd = spec.sgd;
    tc.diffusion = out.diffusion;
    tc.seed = derive_seed(init_seed, 7);
    tc.train_idx = split.train;
    tc.val_idx = split.val;
    tc.test_idx = split.test;
    tc.record_trace = false;
    Architecture arch{static_cast<int>(ds.features.cols()), ds.num_classes(), spec.blocks, false, spec.dropout};
    Rng init_rng(init_seed);
    TrainResult tr = train(ds.features, ds.labels, ds.adjacency, init_params(arch, init_rng), tc);
    out.test_acc = accuracy(tr.logits, ds.labels, split.test);
    out.val_acc = accuracy(tr.logits, ds.labels, split.val);
    return out;
}

FewShotOutcome run_fewshot(const FewShotSpec& spec, std::uint64_t seed, const FeatureBank* bank) {
    FeatureBank own;
    if (bank == nullptr) {
        Rng bank_rng(derive_seed(seed, 0));
        own = gen_feature_bank(spec.bank, bank_rng);
        bank = &own;
    }
    FewShotConfig cfg = spec.cfg;
    if (cfg.center && cfg.base_mean.size() == 0) cfg.base_mean = bank->mean();
    Rng ep_rng(derive_seed(seed, 1));
    FewShotOutcome out;
    out.episodes = sample_episodes(*bank, spec.n_way, spec.k_shot, spec.n_query, spec.episodes, ep_rng);
    std::map<Method, std::vector<double>> acc;
    for (int e = 0; e < spec.episodes; ++e) {
        const std::uint64_t init = derive_seed(seed, 1000 + e);
        for (Method m : spec.methods) {
            EpisodeOutcome o = run_episode(m, out.episodes[e], cfg, init);
            acc[m].push_back(o.accuracy);
            out.records.push_back({e, m, o.accuracy, std::move(o.predictions)});
        }
    }
    for (auto& [m, v] : acc) out.summary[m] = summarize(v);
    return out;
}

}  // namespace diffres
