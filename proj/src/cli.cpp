#include "diffres/cli.hpp"

#include "diffres/experiments.hpp"
#include "diffres/io.hpp"
#include "diffres/verify.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace diffres {

namespace fs = std::filesystem;
using nlohmann::json;

nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path);
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw Error("config " + path + ": " + e.what());
    }
}

namespace {

bool compatible(const json& def, const json& val) {
    if (def.is_null()) return true;
    if (def.is_number_float()) return val.is_number();
    if (def.is_number_integer()) return val.is_number_integer();
    if (def.is_boolean()) return val.is_boolean();
    if (def.is_string()) return val.is_string();
    if (def.is_array()) return val.is_array();
    if (def.is_object()) return val.is_object();
    return false;
}

// Defaults overlaid with the user's config; unknown keys and type mismatches are errors.
json apply_schema(const json& defaults, const json& config, const std::string& where) {
    if (!config.is_object()) throw Error(where + ": expected a JSON object");
    json out = defaults;
    for (auto it = config.begin(); it != config.end(); ++it) {
        const std::string key = it.key();
        if (!defaults.contains(key)) throw Error(where + ": unknown key '" + key + "'");
        const json& def = defaults[key];
        if (!compatible(def, it.value())) throw Error(where + ": key '" + key + "' has the wrong type");
        if (def.is_object() && !def.empty())
            out[key] = apply_schema(def, it.value(), where + "." + key);
        else
            out[key] = it.value();
    }
    return out;
}

std::uint64_t resolve_seed(const CliOptions& opt, const json& cfg) {
    if (opt.seed) return *opt.seed;
    return cfg.at("seed").get<std::uint64_t>();
}

fs::path resolve_out(const CliOptions& opt, const json& cfg) {
    fs::path p;
    if (!opt.out_dir.empty()) {
        p = opt.out_dir;
    } else if (const char* env = std::getenv("DIFFRES_OUT_DIR"); env && *env) {
        p = env;
    } else {
        p = cfg.value("out", std::string("out"));
    }
    fs::create_directories(p);
    return p;
}

StepPolicy parse_policy(const std::string& s) {
    if (s == "strict") return StepPolicy::Strict;
    if (s == "clamp") return StepPolicy::Clamp;
    if (s == "keep_strength") return StepPolicy::KeepStrength;
    throw Error("unknown step_policy '" + s + "'");
}

std::ofstream open_out(const fs::path& path, const std::string& hash) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << "# config-hash: " << hash << '\n';
    return os;
}

void write_json(const fs::path& path, json j, const std::string& hash) {
    j["config_hash"] = hash;
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

SigmaRule sigma_rule(const json& cfg) {
    int k = cfg.at("sigma_k").get<int>();
    if (k > 0) return AdaptiveSigma{k};
    return FixedSigma{cfg.at("sigma").get<double>()};
}

json effective(const json& cfg, const CliOptions& opt, std::uint64_t seed) {
    json e = cfg;
    e["seed"] = seed;
    e["no_diffusion"] = opt.no_diffusion;
    return e;
}

}  // namespace

int cmd_train_synthetic(const CliOptions& opt) {
    json defaults = {{"dataset", "circle"}, {"n_top", nullptr},    {"sigma", 0.5},     {"gamma", 1.0},
                     {"steps", nullptr},    {"blocks", 1},         {"epochs", nullptr}, {"lr", nullptr},
                     {"momentum", 0.9},     {"weight_decay", 5e-4}, {"step_policy", "keep_strength"},
                     {"seeds", 1}, {"batch_size", 0}, {"spiral_theta_max", nullptr},          {"seed", 0},           {"out", "out"},      {"snapshots", true}};
    json cfg = apply_schema(defaults, opt.config, "train-synthetic");
    const std::uint64_t seed = resolve_seed(opt, cfg);
    SyntheticSpec spec = default_synthetic_spec(cfg["dataset"].get<std::string>());
    if (!cfg["n_top"].is_null()) spec.n_top = cfg["n_top"].get<int>();
    if (!cfg["steps"].is_null()) spec.steps = cfg["steps"].get<int>();
    if (!cfg["epochs"].is_null()) spec.epochs = cfg["epochs"].get<int>();
    if (!cfg["lr"].is_null()) spec.sgd.lr = cfg["lr"].get<double>();
    spec.sigma = cfg["sigma"].get<double>();
    spec.gamma = cfg["gamma"].get<double>();
    spec.blocks = cfg["blocks"].get<int>();
    spec.sgd.momentum = cfg["momentum"].get<double>();
    spec.sgd.weight_decay = cfg["weight_decay"].get<double>();
    spec.policy = parse_policy(cfg["step_policy"].get<std::string>());
    spec.batch_size = cfg["batch_size"].get<int>();
    if (!cfg["spiral_theta_max"].is_null()) spec.spiral.theta_max = cfg["spiral_theta_max"].get<double>();
    if (opt.no_diffusion) spec.steps = 0;

    const fs::path out = resolve_out(opt, cfg);
    const std::string hash = config_hash(effective(cfg, opt, seed));
    json runs = json::array();
    double mean_final = 0.0;
    const int seeds = cfg["seeds"].get<int>();
    for (int k = 0; k < seeds; ++k) {
        const std::uint64_t s = seed + k;
        SyntheticOutcome o = run_synthetic(spec, s);
        const std::string tag = spec.dataset + "_seed" + std::to_string(s);
        {
            auto os = open_out(out / ("trace_" + tag + ".csv"), hash);
            o.result.trace.write_csv(os);
        }
        write_json(out / ("params_" + tag + ".json"), params_to_json(o.result.params), hash);
        if (cfg["snapshots"].get<bool>()) {
            // hidden features entering the classifier, per block boundary
            ForwardResult fr = forward(o.data.coords, o.result.params, o.weights, o.diffusion, nullptr, false);
            auto os = open_out(out / ("features_" + tag + ".csv"), hash);
            write_points_csv(os, PointSet{fr.cache.features, o.data.labels});
        }
        const MetricsRow& last = o.result.trace.rows.back();
        mean_final += last.train_acc / seeds;
        runs.push_back({{"seed", s},
                        {"final_train_acc", last.train_acc},
                        {"max_train_acc", o.result.trace.max_train_acc(spec.epochs)},
                        {"gamma", o.diffusion.gamma},
                        {"steps", o.diffusion.steps}});
        std::cout << tag << ": final train acc " << last.train_acc << " (gamma " << o.diffusion.gamma << ", r "
                  << o.diffusion.steps << ")\n";
    }
    write_json(out / "summary.json", {{"command", "train-synthetic"}, {"runs", runs}, {"mean_final_train_acc", mean_final}},
               hash);
    return 0;
}

int cmd_train_graph(const CliOptions& opt) {
    json sbm_defaults = {{"classes", 4}, {"n_per", 100}, {"p_in", 0.1}, {"p_out", 0.005},
                         {"feat_dim", 16}, {"mean_scale", 1.0}, {"feature_noise", 2.0}};
    json defaults = {{"source", "sbm"}, {"edges", ""}, {"features", ""}, {"labels", ""}, {"sbm", sbm_defaults},
                     {"steps", 20}, {"gamma", 0.25}, {"dropout", 0.25}, {"blocks", 1}, {"epochs", 200},
                     {"lr", 0.1}, {"momentum", 0.9}, {"weight_decay", 5e-4}, {"splits", 10}, {"inits", 3},
                     {"n_train", 20}, {"n_val", 30}, {"depth_sweep", json::array()}, {"step_policy", "keep_strength"},
                     {"seed", 0}, {"out", "out"}};
    json cfg = apply_schema(defaults, opt.config, "train-graph");
    const std::uint64_t seed = resolve_seed(opt, cfg);

    GraphDataset ds;
    if (cfg["source"] == "sbm") {
        const json& s = cfg["sbm"];
        SbmParams p{s["classes"].get<int>(), s["n_per"].get<int>(), s["p_in"].get<double>(), s["p_out"].get<double>(),
                    s["feat_dim"].get<int>(), s["mean_scale"].get<double>(), s["feature_noise"].get<double>()};
        Rng rng(derive_seed(seed, 0));
        ds = gen_sbm(p, rng);
    } else if (cfg["source"] == "files") {
        ds = load_graph_dataset(cfg["edges"].get<std::string>(), cfg["features"].get<std::string>(),
                                cfg["labels"].get<std::string>());
    } else {
        throw Error("train-graph: source must be 'sbm' or 'files'");
    }

    GraphSpec spec;
    spec.steps = opt.no_diffusion ? 0 : cfg["steps"].get<int>();
    spec.gamma = cfg["gamma"].get<double>();
    spec.dropout = cfg["dropout"].get<double>();
    spec.blocks = cfg["blocks"].get<int>();
    spec.epochs = cfg["epochs"].get<int>();
    spec.sgd = {cfg["lr"].get<double>(), cfg["momentum"].get<double>(), cfg["weight_decay"].get<double>()};
    spec.n_train = cfg["n_train"].get<int>();
    spec.n_val = cfg["n_val"].get<int>();
    spec.policy = parse_policy(cfg["step_policy"].get<std::string>());

    const fs::path out = resolve_out(opt, cfg);
    const std::string hash = config_hash(effective(cfg, opt, seed));
    const int splits = cfg["splits"].get<int>(), inits = cfg["inits"].get<int>();
    auto protocol = [&](const GraphSpec& sp, std::ostream* rows) {
        std::vector<double> acc;
        for (int s = 0; s < splits; ++s)
            for (int i = 0; i < inits; ++i) {
                GraphRunOutcome o = run_graph(ds, sp, derive_seed(seed, 100 + s), derive_seed(seed, 10000 + 100 * s + i));
                acc.push_back(o.test_acc);
                if (rows) *rows << s << ',' << i << ',' << o.test_acc << ',' << o.val_acc << '\n';
            }
        return acc;
    };
    auto mean_std = [](const std::vector<double>& v) {
        double m = 0.0, var = 0.0;
        for (double x : v) m += x / v.size();
        for (double x : v) var += (x - m) * (x - m) / std::max<size_t>(1, v.size() - 1);
        return std::make_pair(m, std::sqrt(var));
    };

    auto runs = open_out(out / "runs.csv", hash);
    runs << "split,init,test_acc,val_acc\n";
    auto [mean, sd] = mean_std(protocol(spec, &runs));
    std::cout << "nodes " << ds.size() << ", edges " << ds.edge_count << ": test acc " << mean << " +- " << sd << '\n';
    json summary = {{"command", "train-graph"}, {"nodes", ds.size()}, {"edges", ds.edge_count},
                    {"runs", splits * inits}, {"mean", mean}, {"std", sd}};

    if (!cfg["depth_sweep"].empty()) {
        auto sweep = open_out(out / "depth_sweep.csv", hash);
        sweep << "blocks,mean,std\n";
        for (const auto& b : cfg["depth_sweep"]) {
            GraphSpec sp = spec;
            sp.blocks = b.get<int>();
            auto [m, s] = mean_std(protocol(sp, nullptr));
            sweep << sp.blocks << ',' << m << ',' << s << '\n';
        }
    }
    write_json(out / "summary.json", summary, hash);
    return 0;
}

int cmd_fewshot(const CliOptions& opt) {
    json bank_defaults = {{"classes", 5}, {"subclasses", 2}, {"dim", 16}, {"per_class", 60},
                          {"class_scale", 0.5}, {"subclass_scale", 0.4}, {"point_scale", 0.5}};
    json defaults = {{"bank", bank_defaults}, {"features_csv", ""}, {"n_way", 5}, {"k_shot", 1}, {"n_query", 15},
                     {"episodes", 200},
                     {"methods", {"NearestPrototype", "Diffusion", "Convection", "ExternalCD", "InternalCD"}},
                     {"n_top", 8}, {"sigma_k", 4}, {"gamma", 0.5}, {"steps", 10}, {"lambda", 0.5}, {"mu", 0.01},
                     {"alpha", 0.0}, {"blocks", 1}, {"epochs", 100}, {"lr", 0.1}, {"momentum", 0.9},
                     {"weight_decay", 1e-4}, {"center", true}, {"shift", true}, {"rectify", false},
                     {"step_policy", "keep_strength"}, {"sweep_r", json::array()}, {"sweep_n_top", json::array()},
                     {"seed", 0}, {"out", "out"}};
    json cfg = apply_schema(defaults, opt.config, "fewshot");
    const std::uint64_t seed = resolve_seed(opt, cfg);

    FewShotSpec spec;
    const json& b = cfg["bank"];
    spec.bank = {b["classes"].get<int>(), b["subclasses"].get<int>(), b["dim"].get<int>(), b["per_class"].get<int>(),
                 b["class_scale"].get<double>(), b["subclass_scale"].get<double>(), b["point_scale"].get<double>()};
    spec.n_way = cfg["n_way"].get<int>();
    spec.k_shot = cfg["k_shot"].get<int>();
    spec.n_query = cfg["n_query"].get<int>();
    spec.episodes = cfg["episodes"].get<int>();
    spec.methods.clear();
    for (const auto& m : cfg["methods"]) spec.methods.push_back(parse_method(m.get<std::string>()));
    FewShotConfig& c = spec.cfg;
    c.n_top = cfg["n_top"].get<int>();
    c.sigma_k = cfg["sigma_k"].get<int>();
    c.gamma = cfg["gamma"].get<double>();
    c.steps = opt.no_diffusion ? 0 : cfg["steps"].get<int>();
    c.lambda = cfg["lambda"].get<double>();
    c.mu = cfg["mu"].get<double>();
    c.alpha = cfg["alpha"].get<double>();
    c.blocks = cfg["blocks"].get<int>();
    c.epochs = cfg["epochs"].get<int>();
    c.sgd = {cfg["lr"].get<double>(), cfg["momentum"].get<double>(), cfg["weight_decay"].get<double>()};
    c.center = cfg["center"].get<bool>();
    c.shift = cfg["shift"].get<bool>();
    c.rectify = cfg["rectify"].get<bool>();
    c.policy = parse_policy(cfg["step_policy"].get<std::string>());

    std::optional<FeatureBank> bank;
    if (!cfg["features_csv"].get<std::string>().empty()) bank = read_feature_bank(cfg["features_csv"].get<std::string>());
    const FeatureBank* bank_ptr = bank ? &*bank : nullptr;

    const fs::path out = resolve_out(opt, cfg);
    const std::string hash = config_hash(effective(cfg, opt, seed));
    FewShotOutcome o = run_fewshot(spec, seed, bank_ptr);
    {
        auto os = open_out(out / "episodes.csv", hash);
        os << "episode_id,method,accuracy\n";
        for (const auto& r : o.records) os << r.episode << ',' << method_name(r.method) << ',' << r.accuracy << '\n';
    }
    {
        // paired layout: one column per method over the shared episodes
        auto os = open_out(out / "paired.csv", hash);
        os << "episode_id";
        for (Method m : spec.methods) os << ',' << method_name(m);
        os << '\n';
        const size_t per = spec.methods.size();
        for (size_t r = 0; r < o.records.size(); r += per) {
            os << o.records[r].episode;
            for (size_t k = 0; k < per; ++k) os << ',' << o.records[r + k].accuracy;
            os << '\n';
        }
    }
    json summary = {{"command", "fewshot"}, {"episodes", spec.episodes}, {"methods", json::object()}};
    for (const auto& [m, s] : o.summary) {
        summary["methods"][method_name(m)] = {{"mean", s.mean}, {"ci95", s.ci95}, {"n", s.n}};
        std::cout << method_name(m) << ": " << s.mean << " +- " << s.ci95 << '\n';
    }
    write_json(out / "summary.json", summary, hash);

    auto sweep = [&](const char* name, const json& values, auto&& apply) {
        if (values.empty()) return;
        auto os = open_out(out / (std::string(name) + ".csv"), hash);
        os << "value,gamma,steps,mean,ci95\n";
        for (const auto& v : values) {
            FewShotSpec sp = spec;
            sp.methods = {Method::InternalCD};
            apply(sp, v);
            Summary s = run_fewshot(sp, seed, bank_ptr).summary.at(Method::InternalCD);
            os << v << ',' << sp.cfg.gamma << ',' << sp.cfg.steps << ',' << s.mean << ',' << s.ci95 << '\n';
        }
    };
    // fixed total strength r * gamma
    sweep("sweep_r", cfg["sweep_r"], [&](FewShotSpec& sp, const json& v) {
        const double strength = c.gamma * std::max(1, c.steps);
        sp.cfg.steps = v.get<int>();
        sp.cfg.gamma = sp.cfg.steps > 0 ? strength / sp.cfg.steps : 0.0;
    });
    sweep("sweep_n_top", cfg["sweep_n_top"], [&](FewShotSpec& sp, const json& v) { sp.cfg.n_top = v.get<int>(); });
    return 0;
}

int cmd_verify(const CliOptions& opt) {
    json defaults = {{"claims", claim_names()}, {"seed", 0}, {"out", "out"}};
    json cfg = apply_schema(defaults, opt.config, "verify");
    const std::uint64_t seed = resolve_seed(opt, cfg);
    std::vector<std::string> claims = cfg["claims"].get<std::vector<std::string>>();
    if (!opt.claim.empty()) claims = {opt.claim};

    const fs::path out = resolve_out(opt, cfg);
    const std::string hash = config_hash(effective(cfg, opt, seed));
    json reports = json::array();
    bool all = true;
    for (const auto& name : claims) {
        ClaimReport r = run_claim(name, seed);
        all = all && r.passed;
        reports.push_back(r.to_json());
        std::cout << (r.passed ? "PASS " : "FAIL ") << name << ' ' << r.measured.dump() << '\n';
    }
    write_json(out / "report.json", {{"command", "verify"}, {"seed", seed}, {"claims", reports}}, hash);
    return all ? 0 : 1;
}

namespace {

json graph_defaults() {
    return {{"points", ""}, {"label_column", false}, {"dataset", ""}, {"n_top", 10}, {"sigma", 0.5}, {"sigma_k", 0},
            {"seed", 0}, {"out", "out"}};
}

// Points from a CSV file, or a generated synthetic set when "points" is empty.
// subsets receives per-point subset ids for ratio traces (XOR disks, otherwise the labels).
PointSet input_points(const json& cfg, std::uint64_t seed, std::vector<int>* subsets) {
    const std::string path = cfg["points"].get<std::string>(), name = cfg["dataset"].get<std::string>();
    PointSet ps;
    if (!path.empty()) {
        ps = read_points_csv(path, cfg["label_column"].get<bool>());
        if (subsets) *subsets = ps.labels;
        return ps;
    }
    if (name.empty()) throw Error("either 'points' or 'dataset' must be set");
    Rng rng(derive_seed(seed, 0));
    ps = gen_synthetic(name, rng);
    if (subsets) *subsets = name == "xor" ? xor_structure(ps).subset : ps.labels;
    return ps;
}

}  // namespace

int cmd_build_graph(const CliOptions& opt) {
    json cfg = apply_schema(graph_defaults(), opt.config, "build-graph");
    const std::uint64_t seed = resolve_seed(opt, cfg);
    PointSet ps = input_points(cfg, seed, nullptr);
    SparseWeights w = build_weight_matrix(ps.coords, cfg["n_top"].get<int>(), sigma_rule(cfg));
    const fs::path out = resolve_out(opt, cfg);
    const std::string hash = config_hash(effective(cfg, opt, seed));
    auto os = open_out(out / "weights.csv", hash);
    write_weights_csv(os, w);
    std::cout << "nodes " << w.size() << ", stored entries " << w.nnz() << ", components "
              << component_count(connected_components(w)) << ", gamma_max " << stability_max_step(w) << '\n';
    return 0;
}

int cmd_diffuse(const CliOptions& opt) {
    json defaults = graph_defaults();
    defaults["gamma"] = 1.0;
    defaults["steps"] = 10;
    defaults["step_policy"] = "clamp";
    defaults["ratio_trace"] = false;  // label column (or XOR disk) taken as subset ids
    json cfg = apply_schema(defaults, opt.config, "diffuse");
    const std::uint64_t seed = resolve_seed(opt, cfg);
    std::vector<int> subsets;
    PointSet ps = input_points(cfg, seed, &subsets);
    SparseWeights w = build_weight_matrix(ps.coords, cfg["n_top"].get<int>(), sigma_rule(cfg));
    const int steps = opt.no_diffusion ? 0 : cfg["steps"].get<int>();
    DiffusionConfig dc = resolve_step(w, cfg["gamma"].get<double>(), steps, parse_policy(cfg["step_policy"].get<std::string>()));

    const fs::path out = resolve_out(opt, cfg);
    const std::string hash = config_hash(effective(cfg, opt, seed));
    {
        auto os = open_out(out / "diffused.csv", hash);
        write_points_csv(os, PointSet{diffuse(ps.coords, w, dc), ps.labels});
    }
    if (cfg["ratio_trace"].get<bool>()) {
        if (subsets.empty()) throw Error("diffuse: ratio_trace needs a label column with subset ids");
        StructuredDataset ds{ps.coords, subsets, {}};
        int m = 0;
        for (int y : subsets) {
            if (y < 0) throw Error("diffuse: ratio_trace needs every point assigned to a subset");
            m = std::max(m, y + 1);
        }
        ds.subset_class = iota_indices(m);
        auto os = open_out(out / "ratio_trace.csv", hash);
        write_ratio_trace_csv(os, ratio_trace(ds, w, dc.gamma, dc.steps));
    }
    std::cout << "gamma " << dc.gamma << ", steps " << dc.steps << '\n';
    return 0;
}

int run_command(const std::string& name, const CliOptions& opt) {
    if (name == "train-synthetic") return cmd_train_synthetic(opt);
    if (name == "train-graph") return cmd_train_graph(opt);
    if (name == "fewshot") return cmd_fewshot(opt);
    if (name == "verify") return cmd_verify(opt);
    if (name == "build-graph") return cmd_build_graph(opt);
    if (name == "diffuse") return cmd_diffuse(opt);
    throw Error("unknown command '" + name + "'");
}

}  // namespace diffres
