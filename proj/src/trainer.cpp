#include "diffres/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace diffres {

void MetricsTrace::write_csv(std::ostream& os) const {
    os << "epoch,loss,train_acc,val_acc,test_acc\n";
    os.precision(10);
    for (const auto& r : rows) os << r.epoch << ',' << r.loss << ',' << r.train_acc << ',' << r.val_acc << ',' << r.test_acc << '\n';
}

double MetricsTrace::max_train_acc(int up_to_epoch) const {
    double best = 0.0;
    for (const auto& r : rows)
        if (r.epoch <= up_to_epoch) best = std::max(best, r.train_acc);
    return best;
}

namespace {

// Cross-entropy on train rows, plus optional regularizer and prototypical terms.
LossValue objective(const Matrix& logits, const std::vector<int>& labels, const std::vector<int>& train_rows,
                    const SparseWeights& w, const TrainConfig& cfg, const std::vector<int>* proto_rows) {
    LossValue total = cross_entropy_loss(logits, labels, train_rows);
    if (cfg.mu == 0.0 && cfg.alpha == 0.0) return total;
    Matrix probs = softmax_rows(logits);
    Matrix grad_probs = Matrix::Zero(probs.rows(), probs.cols());
    if (cfg.mu != 0.0) {
        LossValue reg = laplacian_regularizer(probs, w, cfg.mu);
        total.value += reg.value;
        grad_probs += reg.grad;
    }
    if (cfg.alpha != 0.0 && proto_rows != nullptr) {
        LossValue pl = prototypical_loss(probs, *proto_rows, cfg.proto_features, cfg.prototypes, cfg.alpha);
        total.value += pl.value;
        grad_probs += pl.grad;
    }
    total.grad += softmax_backward(probs, grad_probs);
    return total;
}

}  // namespace

TrainResult train(const Matrix& x, const std::vector<int>& labels, const SparseWeights& w, DiffResNetParams params,
                  const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw Error("training needs at least one epoch");
    if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw Error("label count does not match points");
    params.validate();
    check_stable(w, cfg.diffusion);

    std::vector<int> train_rows = cfg.train_idx;
    if (train_rows.empty())
        for (int i = 0; i < static_cast<int>(labels.size()); ++i)
            if (labels[i] >= 0) train_rows.push_back(i);

    Rng rng(cfg.seed);
    OptimizerState opt = make_optimizer(params, cfg.sgd);
    TrainResult res;
    const bool dropout = params.arch.dropout_rate > 0.0;
    const bool full_batch = cfg.batch_size <= 0 || cfg.batch_size >= x.rows();

    auto record = [&](int epoch, double loss, const Matrix& logits) {
        if (!cfg.record_trace) return;
        res.trace.rows.push_back({epoch, loss, accuracy(logits, labels, train_rows), accuracy(logits, labels, cfg.val_idx),
                                  accuracy(logits, labels, cfg.test_idx)});
    };
    auto eval = [&]() { return forward(x, params, w, cfg.diffusion, nullptr, false).logits; };
    auto check_finite = [&](double loss, int epoch) {
        if (!std::isfinite(loss))
            throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + " (lr " +
                                   std::to_string(cfg.schedule.lr_at(cfg.sgd.lr, epoch)) + ")");
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.schedule.lr_at(cfg.sgd.lr, epoch);
        if (full_batch) {
            ForwardResult fr = forward(x, params, w, cfg.diffusion, &rng, true);
            LossValue loss = objective(fr.logits, labels, train_rows, w, cfg, &cfg.proto_rows);
            check_finite(loss.value, epoch);
            record(epoch, loss.value, dropout && cfg.record_trace ? eval() : fr.logits);
            Gradients g = backward(params, fr.cache, loss.grad);
            sgd_step(params, g.params, opt, lr);
        } else {
            std::vector<int> order = iota_indices(static_cast<int>(x.rows()));
            std::shuffle(order.begin(), order.end(), rng);
            double epoch_loss = 0.0;
            int batches = 0;
            for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
                std::vector<int> batch(order.begin() + start,
                                       order.begin() + std::min(order.size(), start + cfg.batch_size));
                std::sort(batch.begin(), batch.end());
                std::vector<int> pos(x.rows(), -1);
                for (size_t a = 0; a < batch.size(); ++a) pos[batch[a]] = static_cast<int>(a);
                std::vector<int> local_labels(batch.size()), local_train, local_proto;
                for (size_t a = 0; a < batch.size(); ++a) local_labels[a] = labels[batch[a]];
                for (int i : train_rows)
                    if (pos[i] >= 0) local_train.push_back(pos[i]);
                if (local_train.empty()) continue;
                SparseWeights wb = restrict_and_normalize(w, batch);
                DiffusionConfig dcfg = cfg.diffusion;
                dcfg.gamma = std::min(dcfg.gamma, stability_max_step(wb));
                ForwardResult fr = forward(select_rows(x, batch), params, wb, dcfg, &rng, true);
                TrainConfig local = cfg;
                local.alpha = 0.0;  // prototype rows are global indices; not used in batch mode
                LossValue loss = objective(fr.logits, local_labels, local_train, wb, local, nullptr);
                check_finite(loss.value, epoch);
                Gradients g = backward(params, fr.cache, loss.grad);
                sgd_step(params, g.params, opt, lr);
                epoch_loss += loss.value;
                ++batches;
            }
            if (cfg.record_trace) record(epoch + 1, batches ? epoch_loss / batches : 0.0, eval());
        }
    }

    res.logits = eval();
    if (cfg.record_trace && full_batch) {
        double final_loss = objective(res.logits, labels, train_rows, w, cfg, &cfg.proto_rows).value;
        record(cfg.epochs, final_loss, res.logits);
    }
    res.params = std::move(params);
    return res;
}

}  // namespace diffres
