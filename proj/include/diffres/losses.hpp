#pragma once

#include "diffres/graph.hpp"

namespace diffres {

struct LossValue {
    double value = 0.0;
    Matrix grad;
};

Matrix softmax_rows(const Matrix& logits);
// Pulls a gradient w.r.t. softmax probabilities back to the logits.
Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs);

// Mean cross-entropy over rows listed in `mask`; labels are indexed by row.
LossValue cross_entropy_loss(const Matrix& logits, const std::vector<int>& labels, const std::vector<int>& mask);

// (mu/2) sum_ij w_ij |o_i - o_j|^2, gradient 2 mu (Lambda - W) o.
LossValue laplacian_regularizer(const Matrix& outputs, const SparseWeights& w, double mu);

// alpha * sum_{i in rows} sum_c p_ic |x_i - m_c|^2; gradient w.r.t. probs (zero outside rows).
// query_features row q belongs to probs row rows[q].
LossValue prototypical_loss(const Matrix& probs, const std::vector<int>& rows, const Matrix& query_features,
                            const Matrix& prototypes, double alpha);

int argmax_row(const Matrix& m, Eigen::Index row);
std::vector<int> argmax_rows(const Matrix& m);
double accuracy(const Matrix& logits, const std::vector<int>& labels, const std::vector<int>& rows);

}  // namespace diffres
