#pragma once

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace diffres {

struct CliOptions {
    nlohmann::json config = nlohmann::json::object();
    std::optional<std::uint64_t> seed;
    std::string out_dir;  // empty = DIFFRES_OUT_DIR, then config "out", then "out"
    bool no_diffusion = false;
    std::string claim;
};

nlohmann::json load_config(const std::string& path);

int cmd_train_synthetic(const CliOptions& opt);
int cmd_train_graph(const CliOptions& opt);
int cmd_fewshot(const CliOptions& opt);
int cmd_verify(const CliOptions& opt);
int cmd_build_graph(const CliOptions& opt);
int cmd_diffuse(const CliOptions& opt);

int run_command(const std::string& name, const CliOptions& opt);

}  // namespace diffres
