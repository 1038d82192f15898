#include "diffres/losses.hpp"

#include <cmath>
#include <limits>

namespace diffres {

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        double m = logits.row(i).maxCoeff();
        p.row(i) = (logits.row(i).array() - m).exp().matrix();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs) {
    Matrix g(probs.rows(), probs.cols());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        double dot = probs.row(i).dot(grad_probs.row(i));
        g.row(i) = (probs.row(i).array() * (grad_probs.row(i).array() - dot)).matrix();
    }
    return g;
}

LossValue cross_entropy_loss(const Matrix& logits, const std::vector<int>& labels, const std::vector<int>& mask) {
    if (mask.empty()) throw Error("cross-entropy needs at least one labeled row");
    LossValue out{0.0, Matrix::Zero(logits.rows(), logits.cols())};
    const double scale = 1.0 / static_cast<double>(mask.size());
    for (int i : mask) {
        int y = labels.at(i);
        if (y < 0 || y >= logits.cols()) throw Error("label out of range in masked row " + std::to_string(i));
        double m = logits.row(i).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(i).array() - m).exp().matrix();
        double z = e.sum();
        out.value += scale * (std::log(z) + m - logits(i, y));
        out.grad.row(i) += scale * e / z;
        out.grad(i, y) -= scale;
    }
    return out;
}

LossValue laplacian_regularizer(const Matrix& outputs, const SparseWeights& w, double mu) {
    if (outputs.rows() != w.size()) throw Error("outputs and weights have different sizes");
    LossValue out{0.0, Matrix::Zero(outputs.rows(), outputs.cols())};
    for (int i = 0; i < w.size(); ++i)
        for (long e = w.row_begin(i); e < w.row_end(i); ++e) {
            int j = w.cols()[e];
            Eigen::RowVectorXd diff = outputs.row(i) - outputs.row(j);
            out.value += 0.5 * mu * w.values()[e] * diff.squaredNorm();
            out.grad.row(i) += 2.0 * mu * w.values()[e] * diff;
        }
    return out;
}

LossValue prototypical_loss(const Matrix& probs, const std::vector<int>& rows, const Matrix& query_features,
                            const Matrix& prototypes, double alpha) {
    LossValue out{0.0, Matrix::Zero(probs.rows(), probs.cols())};
    if (alpha == 0.0) return out;
    if (static_cast<Eigen::Index>(rows.size()) != query_features.rows() || prototypes.rows() != probs.cols())
        throw Error("prototypical loss shape mismatch");
    for (size_t q = 0; q < rows.size(); ++q)
        for (Eigen::Index c = 0; c < prototypes.rows(); ++c) {
            double d = (query_features.row(q) - prototypes.row(c)).squaredNorm();
            out.value += alpha * probs(rows[q], c) * d;
            out.grad(rows[q], c) += alpha * d;
        }
    return out;
}

int argmax_row(const Matrix& m, Eigen::Index row) {
    int best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c)
        if (m(row, c) > m(row, best)) best = static_cast<int>(c);
    return best;
}

std::vector<int> argmax_rows(const Matrix& m) {
    std::vector<int> out(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[i] = argmax_row(m, i);
    return out;
}

double accuracy(const Matrix& logits, const std::vector<int>& labels, const std::vector<int>& rows) {
    if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
    int hit = 0;
    for (int i : rows) hit += argmax_row(logits, i) == labels.at(i);
    return static_cast<double>(hit) / static_cast<double>(rows.size());
}

}  // namespace diffres
