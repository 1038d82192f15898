#pragma once

#include "diffres/common.hpp"

#include <utility>
#include <variant>

namespace diffres {

// Symmetric nonnegative weights stored row-wise (CSR) with sorted columns.
class SparseWeights {
public:
    SparseWeights() = default;
    explicit SparseWeights(int n);

    // Triplets may come in any order; duplicates are summed.
    static SparseWeights from_triplets(int n, std::vector<std::tuple<int, int, double>> triplets);
    static SparseWeights from_dense(const Matrix& w);

    int size() const { return n_; }
    long nnz() const { return static_cast<long>(cols_.size()); }
    const std::vector<double>& degrees() const { return degrees_; }
    double degree(int i) const { return degrees_[i]; }
    double max_degree() const;

    // Row access: [begin, end) offsets into cols()/values().
    long row_begin(int i) const { return row_ptr_[i]; }
    long row_end(int i) const { return row_ptr_[i + 1]; }
    const std::vector<int>& cols() const { return cols_; }
    const std::vector<double>& values() const { return vals_; }

    double at(int i, int j) const;
    bool is_symmetric() const;
    Matrix to_dense() const;
    SparseWeights with_self_loops(double w = 1.0) const;

    bool operator==(const SparseWeights& o) const {
        return n_ == o.n_ && row_ptr_ == o.row_ptr_ && cols_ == o.cols_ && vals_ == o.vals_;
    }

private:
    friend SparseWeights make_csr(int, std::vector<long>, std::vector<int>, std::vector<double>);
    void recompute_degrees();

    int n_ = 0;
    std::vector<long> row_ptr_{0};
    std::vector<int> cols_;
    std::vector<double> vals_;
    std::vector<double> degrees_;
};

SparseWeights make_csr(int n, std::vector<long> row_ptr, std::vector<int> cols, std::vector<double> vals);

struct FixedSigma {
    double sigma;
};
struct AdaptiveSigma {
    int k;  // sigma_i = distance to the k-th nearest other point
};
using SigmaRule = std::variant<FixedSigma, AdaptiveSigma>;

Matrix gaussian_kernel(const Matrix& points, const SigmaRule& sigma);
void zero_diagonal(Matrix& w);
SparseWeights sparsify_topk(const Matrix& w, int n_top);
SparseWeights symmetrize(const SparseWeights& w);
// Rows with zero degree raise unless allow_isolated, in which case they stay empty.
SparseWeights normalize_symmetric(const SparseWeights& w, bool allow_isolated = false);
SparseWeights build_weight_matrix(const Matrix& points, int n_top, const SigmaRule& sigma);

// Principal submatrix on `rows`, renormalized. Used for mini-batch diffusion.
SparseWeights restrict_and_normalize(const SparseWeights& w, const std::vector<int>& rows);

Matrix graph_laplacian(const SparseWeights& w);  // dense Lambda - W
std::vector<int> connected_components(const SparseWeights& w);
int component_count(const std::vector<int>& comp);

struct SpectralDecomposition {
    Vector eigenvalues;  // ascending
    Matrix eigenvectors; // columns
};

inline constexpr int kDefaultEigenLimit = 500;

SpectralDecomposition symmetric_eigendecomposition(const Matrix& a, int size_limit = kDefaultEigenLimit);
double spectral_radius(const Matrix& a, int size_limit = kDefaultEigenLimit);

}  // namespace diffres
