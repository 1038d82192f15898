#pragma once

#include "diffres/trainer.hpp"

#include <iosfwd>
#include <string>

namespace diffres {

struct Episode {
    int n_way = 0;
    Matrix support;
    std::vector<int> support_labels;
    Matrix query;
    std::vector<int> query_labels;  // hidden, used only for scoring
    std::vector<int> classes;       // bank class behind each episode label
};

struct FeatureBank {
    std::vector<Matrix> by_class;
    int dim() const { return by_class.empty() ? 0 : static_cast<int>(by_class[0].cols()); }
    Vector mean() const;
};

struct BankParams {
    int classes = 5;
    int subclasses = 2;
    int dim = 16;
    int per_class = 60;
    double class_scale = 0.5;     // class centers ~ N(0, class_scale^2 I)
    double subclass_scale = 0.4;  // subclass centers around the class center
    double point_scale = 0.5;     // points around the subclass center
};

FeatureBank gen_feature_bank(const BankParams& p, Rng& rng);
// CSV rows: class_id, x_1..x_M
FeatureBank read_feature_bank(const std::string& path);

std::vector<Episode> sample_episodes(const FeatureBank& bank, int n_way, int k_shot, int n_query, int count, Rng& rng);

Matrix center_normalize(const Matrix& features, const Vector& base_mean);
Matrix cross_domain_shift(const Matrix& support, const Matrix& query);
Matrix class_prototypes(const Matrix& support, const std::vector<int>& labels, int n_way);
Matrix rectify_prototypes(const Matrix& support, const std::vector<int>& labels, const Matrix& query,
                          const Matrix& prototypes);

std::vector<int> nearest_prototype(const Matrix& query, const Matrix& prototypes);
double prediction_accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

struct LabelPropagation {
    std::vector<int> predictions;
    Matrix assignments;
    std::vector<double> objective;  // one value per sweep, starting with the initial assignment
    bool converged = false;
};

// Cyclic exact minimization over each y_i of
//   sum_i y_i.a_i - lambda sum_ij w_ij y_i.y_j + sum_ic y_ic log y_ic,
// with a_ic = |x_i - m_c|^2. On hard labelings this equals the stated objective
// sum y.a + (lambda/2) sum w |y_i - y_j|^2 up to the constant lambda sum_i d_i.
LabelPropagation laplacian_label_propagation(const Matrix& query, const Matrix& prototypes, const SparseWeights& w,
                                             double lambda, int iters = 50, double tol = 1e-6);
double label_propagation_objective(const Matrix& y, const Matrix& dist, const SparseWeights& w, double lambda);

enum class Method { NearestPrototype, Diffusion, Convection, ExternalCD, InternalCD };
Method parse_method(const std::string& name);
std::string method_name(Method m);

struct FewShotConfig {
    bool center = true;
    bool shift = true;
    bool rectify = false;  // rectified prototypes for NearestPrototype / Diffusion
    Vector base_mean;      // empty = zero

    int n_top = 8;
    int sigma_k = 4;
    double gamma = 0.5;
    int steps = 10;
    StepPolicy policy = StepPolicy::KeepStrength;
    double lambda = 0.5;
    double mu = 0.01;
    double alpha = 0.0;

    int blocks = 1;
    int epochs = 100;
    SgdConfig sgd{0.1, 0.9, 1e-4};
};

struct EpisodeOutcome {
    double accuracy = 0.0;
    std::vector<int> predictions;
};

EpisodeOutcome run_episode(Method method, const Episode& episode, const FewShotConfig& cfg, std::uint64_t seed);

struct Summary {
    double mean = 0.0;
    double ci95 = 0.0;  // 1.96 sigma / sqrt(n)
    int n = 0;
};
Summary summarize(const std::vector<double>& values);

}  // namespace diffres
