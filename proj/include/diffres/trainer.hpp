#pragma once

#include "diffres/losses.hpp"
#include "diffres/optim.hpp"

#include <iosfwd>

namespace diffres {

struct TrainConfig {
    int epochs = 30;
    SgdConfig sgd;
    MultiStepSchedule schedule;  // empty milestones = constant lr
    DiffusionConfig diffusion;
    std::uint64_t seed = 0;      // dropout and batch shuffling

    std::vector<int> train_idx;  // empty = every labeled row
    std::vector<int> val_idx;
    std::vector<int> test_idx;

    double mu = 0.0;             // Laplacian regularizer on softmax outputs
    double alpha = 0.0;          // prototypical loss weight
    std::vector<int> proto_rows;
    Matrix proto_features;
    Matrix prototypes;

    int batch_size = 0;          // 0 = full batch
    bool record_trace = true;
};

struct MetricsRow {
    int epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
};

struct MetricsTrace {
    std::vector<MetricsRow> rows;

    void write_csv(std::ostream& os) const;
    double max_train_acc(int up_to_epoch) const;
};

struct TrainResult {
    DiffResNetParams params;
    MetricsTrace trace;
    Matrix logits;  // eval-mode logits of the final parameters
};

class TrainingDiverged : public Error {
public:
    using Error::Error;
};

// Row e of the trace describes the parameters after e updates (row 0 = initialization).
TrainResult train(const Matrix& x, const std::vector<int>& labels, const SparseWeights& w, DiffResNetParams params,
                  const TrainConfig& cfg);

}  // namespace diffres
