#include "diffres/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <tuple>

namespace diffres {

SparseWeights::SparseWeights(int n) : n_(n), row_ptr_(n + 1, 0), degrees_(n, 0.0) {}

SparseWeights make_csr(int n, std::vector<long> row_ptr, std::vector<int> cols, std::vector<double> vals) {
    SparseWeights w;
    w.n_ = n;
    w.row_ptr_ = std::move(row_ptr);
    w.cols_ = std::move(cols);
    w.vals_ = std::move(vals);
    w.recompute_degrees();
    return w;
}

void SparseWeights::recompute_degrees() {
    degrees_.assign(n_, 0.0);
    for (int i = 0; i < n_; ++i)
        for (long e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) degrees_[i] += vals_[e];
}

SparseWeights SparseWeights::from_triplets(int n, std::vector<std::tuple<int, int, double>> triplets) {
    for (const auto& [i, j, v] : triplets) {
        if (i < 0 || j < 0 || i >= n || j >= n) throw Error("triplet index out of range");
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error("weights must be finite and nonnegative");
    }
    std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    std::vector<long> row_ptr(n + 1, 0);
    std::vector<int> cols;
    std::vector<double> vals;
    for (size_t t = 0; t < triplets.size(); ++t) {
        auto [i, j, v] = triplets[t];
        if (t > 0 && std::get<0>(triplets[t - 1]) == i && std::get<1>(triplets[t - 1]) == j) {
            vals.back() += v;
            continue;
        }
        cols.push_back(j);
        vals.push_back(v);
        row_ptr[i + 1]++;
    }
    for (int i = 0; i < n; ++i) row_ptr[i + 1] += row_ptr[i];
    return make_csr(n, std::move(row_ptr), std::move(cols), std::move(vals));
}

SparseWeights SparseWeights::from_dense(const Matrix& w) {
    if (w.rows() != w.cols()) throw Error("weight matrix must be square");
    const int n = static_cast<int>(w.rows());
    std::vector<long> row_ptr(n + 1, 0);
    std::vector<int> cols;
    std::vector<double> vals;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (w(i, j) < 0.0 || !std::isfinite(w(i, j))) throw Error("weights must be finite and nonnegative");
            if (w(i, j) != 0.0) {
                cols.push_back(j);
                vals.push_back(w(i, j));
            }
        }
        row_ptr[i + 1] = static_cast<long>(cols.size());
    }
    return make_csr(n, std::move(row_ptr), std::move(cols), std::move(vals));
}

double SparseWeights::max_degree() const {
    double m = 0.0;
    for (double d : degrees_) m = std::max(m, d);
    return m;
}

double SparseWeights::at(int i, int j) const {
    auto b = cols_.begin() + row_ptr_[i], e = cols_.begin() + row_ptr_[i + 1];
    auto it = std::lower_bound(b, e, j);
    if (it != e && *it == j) return vals_[it - cols_.begin()];
    return 0.0;
}

bool SparseWeights::is_symmetric() const {
    for (int i = 0; i < n_; ++i)
        for (long e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e)
            if (at(cols_[e], i) != vals_[e]) return false;
    return true;
}

Matrix SparseWeights::to_dense() const {
    Matrix m = Matrix::Zero(n_, n_);
    for (int i = 0; i < n_; ++i)
        for (long e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) m(i, cols_[e]) = vals_[e];
    return m;
}

SparseWeights SparseWeights::with_self_loops(double w) const {
    std::vector<std::tuple<int, int, double>> t;
    t.reserve(cols_.size() + n_);
    for (int i = 0; i < n_; ++i) {
        for (long e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) t.emplace_back(i, cols_[e], vals_[e]);
        t.emplace_back(i, i, w);
    }
    return from_triplets(n_, std::move(t));
}

Matrix gaussian_kernel(const Matrix& points, const SigmaRule& sigma) {
    const int n = static_cast<int>(points.rows());
    if (n < 2) throw Error("gaussian kernel needs at least 2 points");
    Matrix d2(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double v = (points.row(i) - points.row(j)).squaredNorm();
            d2(i, j) = v;
            d2(j, i) = v;
        }

    Vector s2(n);
    if (const auto* f = std::get_if<FixedSigma>(&sigma)) {
        if (!(f->sigma > 0.0)) throw Error("sigma must be positive");
        s2.setConstant(f->sigma * f->sigma);
    } else {
        const int k = std::get<AdaptiveSigma>(sigma).k;
        if (k < 1 || k >= n) throw Error("adaptive sigma needs 1 <= k < N");
        std::vector<double> row(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) row[j] = d2(i, j);
            // index 0 of the sorted row is the point itself
            std::nth_element(row.begin(), row.begin() + k, row.end());
            if (row[k] <= 0.0) throw Error("degenerate adaptive bandwidth at point " + std::to_string(i));
            s2(i) = row[k];
        }
    }

    Matrix w(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) w(i, j) = std::exp(-d2(i, j) / s2(i));
    return w;
}

void zero_diagonal(Matrix& w) { w.diagonal().setZero(); }

SparseWeights sparsify_topk(const Matrix& w, int n_top) {
    const int n = static_cast<int>(w.rows());
    if (w.cols() != n) throw Error("weight matrix must be square");
    if (n_top < 1 || n_top >= n) throw Error("n_top must satisfy 1 <= n_top < N");
    std::vector<long> row_ptr(n + 1, 0);
    std::vector<int> cols;
    std::vector<double> vals;
    std::vector<int> cand;
    for (int i = 0; i < n; ++i) {
        cand.clear();
        for (int j = 0; j < n; ++j)
            if (j != i) cand.push_back(j);
        std::partial_sort(cand.begin(), cand.begin() + n_top, cand.end(), [&](int a, int b) {
            if (w(i, a) != w(i, b)) return w(i, a) > w(i, b);
            return a < b;
        });
        std::vector<int> keep(cand.begin(), cand.begin() + n_top);
        std::sort(keep.begin(), keep.end());
        for (int j : keep) {
            if (w(i, j) == 0.0) continue;
            if (w(i, j) < 0.0) throw Error("weights must be nonnegative");
            cols.push_back(j);
            vals.push_back(w(i, j));
        }
        row_ptr[i + 1] = static_cast<long>(cols.size());
    }
    return make_csr(n, std::move(row_ptr), std::move(cols), std::move(vals));
}

SparseWeights symmetrize(const SparseWeights& w) {
    const int n = w.size();
    std::vector<std::tuple<int, int, double>> t;
    t.reserve(2 * w.nnz());
    for (int i = 0; i < n; ++i)
        for (long e = w.row_begin(i); e < w.row_end(i); ++e) {
            int j = w.cols()[e];
            double v = std::max(w.values()[e], w.at(j, i));
            t.emplace_back(i, j, v);
            if (w.at(j, i) == 0.0) t.emplace_back(j, i, v);
        }
    return SparseWeights::from_triplets(n, std::move(t));
}

SparseWeights normalize_symmetric(const SparseWeights& w, bool allow_isolated) {
    const int n = w.size();
    Vector inv_sqrt(n);
    for (int i = 0; i < n; ++i) {
        double d = w.degree(i);
        if (d <= 0.0) {
            if (!allow_isolated) throw Error("isolated vertex " + std::to_string(i) + ", cannot normalize");
            inv_sqrt(i) = 0.0;
        } else {
            inv_sqrt(i) = 1.0 / std::sqrt(d);
        }
    }
    std::vector<long> row_ptr(n + 1, 0);
    std::vector<double> vals(w.values().size());
    for (int i = 0; i < n; ++i) {
        row_ptr[i + 1] = w.row_end(i);
        for (long e = w.row_begin(i); e < w.row_end(i); ++e) {
            int j = w.cols()[e];
            // same operand order for (i,j) and (j,i) keeps exact symmetry
            vals[e] = w.values()[e] * (i < j ? inv_sqrt(i) * inv_sqrt(j) : inv_sqrt(j) * inv_sqrt(i));
        }
    }
    return make_csr(n, std::move(row_ptr), w.cols(), std::move(vals));
}

SparseWeights build_weight_matrix(const Matrix& points, int n_top, const SigmaRule& sigma) {
    Matrix k = gaussian_kernel(points, sigma);
    zero_diagonal(k);
    return normalize_symmetric(symmetrize(sparsify_topk(k, n_top)));
}

SparseWeights restrict_and_normalize(const SparseWeights& w, const std::vector<int>& rows) {
    std::vector<int> pos(w.size(), -1);
    for (size_t a = 0; a < rows.size(); ++a) pos[rows[a]] = static_cast<int>(a);
    std::vector<std::tuple<int, int, double>> t;
    for (size_t a = 0; a < rows.size(); ++a) {
        int i = rows[a];
        for (long e = w.row_begin(i); e < w.row_end(i); ++e) {
            int b = pos[w.cols()[e]];
            if (b >= 0) t.emplace_back(static_cast<int>(a), b, w.values()[e]);
        }
    }
    return normalize_symmetric(SparseWeights::from_triplets(static_cast<int>(rows.size()), std::move(t)), true);
}

Matrix graph_laplacian(const SparseWeights& w) {
    if (!w.is_symmetric()) throw Error("graph Laplacian requires a symmetric weight matrix");
    Matrix l = -w.to_dense();
    for (int i = 0; i < w.size(); ++i) l(i, i) += w.degree(i);
    return l;
}

std::vector<int> connected_components(const SparseWeights& w) {
    const int n = w.size();
    std::vector<int> comp(n, -1);
    int next = 0;
    std::vector<int> stack;
    for (int s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = next;
        stack.assign(1, s);
        while (!stack.empty()) {
            int i = stack.back();
            stack.pop_back();
            for (long e = w.row_begin(i); e < w.row_end(i); ++e) {
                int j = w.cols()[e];
                if (w.values()[e] > 0.0 && comp[j] < 0) {
                    comp[j] = next;
                    stack.push_back(j);
                }
            }
        }
        ++next;
    }
    return comp;
}

int component_count(const std::vector<int>& comp) {
    int k = 0;
    for (int c : comp) k = std::max(k, c + 1);
    return k;
}

// Cyclic Jacobi rotations on a dense copy.
SpectralDecomposition symmetric_eigendecomposition(const Matrix& input, int size_limit) {
    const int n = static_cast<int>(input.rows());
    if (input.cols() != n) throw Error("eigendecomposition requires a square matrix");
    if (n > size_limit)
        throw Error("matrix of size " + std::to_string(n) + " exceeds the dense eigensolver limit " +
                    std::to_string(size_limit) + "; use a power-iteration estimate instead");
    if ((input - input.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, input.cwiseAbs().maxCoeff()))
        throw Error("eigendecomposition requires a symmetric matrix");

    Matrix a = 0.5 * (input + input.transpose());
    Matrix v = Matrix::Identity(n, n);
    const double scale = a.norm();
    auto off = [&]() {
        double s = 0.0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < j; ++i) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    for (int sweep = 0; sweep < 100 && scale > 0.0; ++sweep) {
        if (off() <= 1e-15 * scale) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (int k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order = iota_indices(n);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) < a(y, y); });
    SpectralDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (int k = 0; k < n; ++k) {
        out.eigenvalues(k) = a(order[k], order[k]);
        out.eigenvectors.col(k) = v.col(order[k]);
    }
    return out;
}

double spectral_radius(const Matrix& a, int size_limit) {
    SpectralDecomposition sd = symmetric_eigendecomposition(a, size_limit);
    if (sd.eigenvalues.size() == 0) return 0.0;
    return std::max(std::abs(sd.eigenvalues(0)), std::abs(sd.eigenvalues(sd.eigenvalues.size() - 1)));
}

}  // namespace diffres
