#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace diffres {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kUnlabeled = -1;

struct PointSet {
    Matrix coords;            // N x d
    std::vector<int> labels;  // empty, or N entries with kUnlabeled for missing

    int size() const { return static_cast<int>(coords.rows()); }
    int dim() const { return static_cast<int>(coords.cols()); }
    bool has_labels() const { return !labels.empty(); }
    int num_classes() const;
    void validate() const;
};

// Index helpers shared by several modules.
std::vector<int> iota_indices(int n);
Matrix select_rows(const Matrix& m, const std::vector<int>& rows);

}  // namespace diffres
