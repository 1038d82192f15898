#include "CLI11.hpp"
#include "diffres/cli.hpp"
#include "diffres/common.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Diff-ResNet experiments and verification"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    diffres::CliOptions opt;

    const char* commands[][2] = {
        {"train-synthetic", "train on a 2-D synthetic dataset"},
        {"train-graph", "semi-supervised node classification"},
        {"fewshot", "few-shot episodes on a feature bank"},
        {"verify", "numerically check the theoretical claims"},
        {"build-graph", "build the normalized weight matrix of a point set"},
        {"diffuse", "run pure diffusion on a point set"},
    };
    for (auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c[0], c[1]);
        sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "random seed, overrides the config");
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_flag("--no-diffusion", opt.no_diffusion, "set the diffusion step count to zero");
        if (std::string(c[0]) == "verify") sub->add_option("--claim", opt.claim, "run a single claim");
    }

    CLI11_PARSE(app, argc, argv);
    CLI::App* sub = app.get_subcommands().front();
    try {
        if (!config_path.empty()) opt.config = diffres::load_config(config_path);
        if (sub->count("--seed")) opt.seed = seed;
        return diffres::run_command(sub->get_name(), opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
