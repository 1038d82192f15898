#pragma once

#include "diffres/graph.hpp"

namespace diffres {

struct DiffusionConfig {
    double gamma = 1.0;
    int steps = 0;
    bool guard = true;
};

// How experiment runners adapt a requested step size that exceeds 1/max d_i.
enum class StepPolicy {
    Strict,        // throw
    Clamp,         // gamma <- gamma_max, steps unchanged
    KeepStrength,  // gamma <- gamma_max-ish, steps raised so that steps*gamma is unchanged
};

Matrix diffusion_step(const Matrix& x, const SparseWeights& w, double gamma);
Matrix diffusion_backward(const Matrix& grad_out, const SparseWeights& w, double gamma);
Matrix diffuse(const Matrix& x, const SparseWeights& w, const DiffusionConfig& cfg);
double stability_max_step(const SparseWeights& w);
void check_stable(const SparseWeights& w, const DiffusionConfig& cfg);
DiffusionConfig resolve_step(const SparseWeights& w, double gamma, int steps, StepPolicy policy);

// Dense iteration matrix I - gamma (Lambda - W).
Matrix iteration_matrix(const SparseWeights& w, double gamma);

Matrix diffusion_closed_form(const Matrix& x0, const SpectralDecomposition& laplacian_eig, double gamma, double t);
Matrix diffusion_closed_form(const Matrix& x0, const Matrix& laplacian, double gamma, double t);

}  // namespace diffres
