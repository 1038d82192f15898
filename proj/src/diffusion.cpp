#include "diffres/diffusion.hpp"

#include <cmath>
#include <limits>

namespace diffres {

namespace {

void check_dims(const Matrix& x, const SparseWeights& w) {
    if (x.rows() != w.size())
        throw Error("dimension mismatch: " + std::to_string(x.rows()) + " rows vs graph of size " +
                    std::to_string(w.size()));
}

}  // namespace

Matrix diffusion_step(const Matrix& x, const SparseWeights& w, double gamma) {
    check_dims(x, w);
    Matrix out = x;
    if (gamma == 0.0) return out;
    const auto& cols = w.cols();
    const auto& vals = w.values();
    const Eigen::Index d = x.cols();
    for (int i = 0; i < w.size(); ++i) {
        for (Eigen::Index c = 0; c < d; ++c) {
            double acc = 0.0;
            for (long e = w.row_begin(i); e < w.row_end(i); ++e) acc += vals[e] * (x(i, c) - x(cols[e], c));
            out(i, c) = x(i, c) - gamma * acc;
        }
    }
    return out;
}

// Transposed product written in scatter form: column j of the map sends
// (1 - gamma d_j) g_j to row j and gamma w_ij g_j to row i.
Matrix diffusion_backward(const Matrix& grad_out, const SparseWeights& w, double gamma) {
    check_dims(grad_out, w);
    Matrix out = grad_out;
    if (gamma == 0.0) return out;
    const auto& cols = w.cols();
    const auto& vals = w.values();
    for (int j = 0; j < w.size(); ++j) {
        out.row(j) -= gamma * w.degree(j) * grad_out.row(j);
        for (long e = w.row_begin(j); e < w.row_end(j); ++e) out.row(cols[e]) += gamma * vals[e] * grad_out.row(j);
    }
    return out;
}

double stability_max_step(const SparseWeights& w) {
    double m = w.max_degree();
    if (m <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / m;
}

void check_stable(const SparseWeights& w, const DiffusionConfig& cfg) {
    if (cfg.gamma < 0.0 || cfg.steps < 0) throw Error("diffusion needs gamma >= 0 and steps >= 0");
    if (!cfg.guard || cfg.steps == 0) return;
    double gmax = stability_max_step(w);
    if (cfg.gamma > gmax * (1.0 + 1e-12))
        throw Error("unstable diffusion: gamma " + std::to_string(cfg.gamma) + " exceeds 1/max degree " +
                    std::to_string(gmax));
}

Matrix diffuse(const Matrix& x, const SparseWeights& w, const DiffusionConfig& cfg) {
    check_dims(x, w);
    check_stable(w, cfg);
    Matrix out = x;
    for (int s = 0; s < cfg.steps; ++s) out = diffusion_step(out, w, cfg.gamma);
    return out;
}

DiffusionConfig resolve_step(const SparseWeights& w, double gamma, int steps, StepPolicy policy) {
    DiffusionConfig cfg{gamma, steps, true};
    double gmax = stability_max_step(w);
    if (steps == 0 || gamma <= gmax) return cfg;
    if (policy == StepPolicy::Strict)
        throw Error("step size " + std::to_string(gamma) + " exceeds the stable bound " + std::to_string(gmax));
    if (policy == StepPolicy::Clamp) {
        cfg.gamma = gmax;
        return cfg;
    }
    double strength = gamma * steps;
    cfg.steps = static_cast<int>(std::ceil(strength / gmax - 1e-9));
    cfg.gamma = std::min(gmax, strength / cfg.steps);
    return cfg;
}

Matrix iteration_matrix(const SparseWeights& w, double gamma) {
    return Matrix::Identity(w.size(), w.size()) - gamma * graph_laplacian(w);
}

Matrix diffusion_closed_form(const Matrix& x0, const SpectralDecomposition& eig, double gamma, double t) {
    if (x0.rows() != eig.eigenvectors.rows()) throw Error("dimension mismatch in closed-form diffusion");
    if (t == 0.0) return x0;
    const Matrix& v = eig.eigenvectors;
    Matrix coeff = v.transpose() * x0;
    for (Eigen::Index i = 0; i < coeff.rows(); ++i) coeff.row(i) *= std::exp(-gamma * eig.eigenvalues(i) * t);
    return v * coeff;
}

Matrix diffusion_closed_form(const Matrix& x0, const Matrix& laplacian, double gamma, double t) {
    return diffusion_closed_form(x0, symmetric_eigendecomposition(laplacian), gamma, t);
}

}  // namespace diffres
