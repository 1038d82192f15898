#include "diffres/optim.hpp"

#include <cmath>

namespace diffres {

OptimizerState make_optimizer(const DiffResNetParams& params, const SgdConfig& cfg) {
    return {cfg, Vector::Zero(params.parameter_count())};
}

void sgd_step(DiffResNetParams& params, const DiffResNetParams& grads, OptimizerState& state, double lr) {
    Vector p = params.flatten();
    Vector g = grads.flatten();
    if (g.size() != p.size() || state.velocity.size() != p.size()) throw Error("optimizer shape mismatch");
    const double step = lr > 0.0 ? lr : state.cfg.lr;
    state.velocity = state.cfg.momentum * state.velocity + (g + state.cfg.weight_decay * p);
    params.assign(p - step * state.velocity);
}

double MultiStepSchedule::lr_at(double base_lr, int epoch) const {
    int passed = 0;
    for (int m : milestones) passed += epoch >= m;
    return base_lr * std::pow(factor, passed);
}

MultiStepSchedule MultiStepSchedule::halves_and_quarters(int epochs) {
    return {{epochs / 2, (3 * epochs) / 4}, 0.1};
}

}  // namespace diffres
