#pragma once

#include "diffres/network.hpp"

namespace diffres {

struct SgdConfig {
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 0.0;
};

struct OptimizerState {
    SgdConfig cfg;
    Vector velocity;  // mirrors DiffResNetParams::flatten()
};

OptimizerState make_optimizer(const DiffResNetParams& params, const SgdConfig& cfg);

// v <- m v + (g + wd p); p <- p - lr v. `lr` overrides cfg.lr when positive (schedules).
void sgd_step(DiffResNetParams& params, const DiffResNetParams& grads, OptimizerState& state, double lr = -1.0);

// lr * factor^(number of milestones <= epoch)
struct MultiStepSchedule {
    std::vector<int> milestones;
    double factor = 0.1;

    double lr_at(double base_lr, int epoch) const;
    static MultiStepSchedule halves_and_quarters(int epochs);  // milestones at 0.5T and 0.75T
};

}  // namespace diffres
