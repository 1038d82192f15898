#include "doctest.h"

#include "diffres/datasets.hpp"
#include "diffres/graph.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

using namespace diffres;

namespace {

Matrix random_points(int n, int d, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    return x;
}

}  // namespace

TEST_CASE("gaussian kernel values") {
    Matrix x(3, 1);
    x << 0.0, 1.0, 2.0;
    Matrix k = gaussian_kernel(x, FixedSigma{1.0});
    // hand evaluation of exp(-d^2 / sigma^2)
    CHECK(k(0, 0) == 1.0);
    CHECK(k(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(k(0, 2) == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));
    CHECK(k(1, 2) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
    CHECK(k(2, 0) == k(0, 2));

    Matrix same(2, 2);
    same << 0.3, 0.4, 0.3, 0.4;
    CHECK(gaussian_kernel(same, FixedSigma{0.5})(0, 1) == 1.0);
}

TEST_CASE("adaptive bandwidth uses the k-th nearest other point") {
    Matrix x(3, 1);
    x << 0.0, 1.0, 3.0;
    // sigma_0 = 1 (nearest other is 1 away), sigma_2 = 2
    Matrix k = gaussian_kernel(x, AdaptiveSigma{1});
    CHECK(k(0, 1) == doctest::Approx(std::exp(-1.0)));
    CHECK(k(2, 1) == doctest::Approx(std::exp(-4.0 / 4.0)));
    Matrix dup(2, 1);
    dup << 1.0, 1.0;
    CHECK_THROWS_WITH_AS(gaussian_kernel(dup, AdaptiveSigma{1}), doctest::Contains("degenerate adaptive bandwidth"),
                         Error);
}

TEST_CASE("top-k sparsification") {
    Matrix w(3, 3);
    w << 0.0, 0.9, 0.2, 0.9, 0.0, 0.5, 0.2, 0.5, 0.0;
    SparseWeights s = sparsify_topk(w, 1);
    CHECK(s.at(0, 1) == 0.9);
    CHECK(s.at(0, 2) == 0.0);

    Matrix tie(3, 3);
    tie << 0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0;
    SparseWeights t = sparsify_topk(tie, 1);
    CHECK(t.at(0, 1) == 0.5);
    CHECK(t.at(0, 2) == 0.0);
    CHECK(t.at(2, 0) == 0.5);

    SparseWeights full = sparsify_topk(tie, 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(full.at(i, j) == tie(i, j));
}

TEST_CASE("max symmetrization") {
    Matrix w = Matrix::Zero(2, 2);
    w(0, 1) = 0.9;
    SparseWeights s = symmetrize(SparseWeights::from_dense(w));
    CHECK(s.at(0, 1) == 0.9);
    CHECK(s.at(1, 0) == 0.9);
    CHECK(symmetrize(s) == s);

    Rng rng(1);
    Matrix k = gaussian_kernel(random_points(5, 2, rng), FixedSigma{1.0});
    zero_diagonal(k);
    SparseWeights r = symmetrize(sparsify_topk(k, 2));
    Matrix d = r.to_dense();
    CHECK((d - d.transpose()).norm() == 0.0);
}

TEST_CASE("symmetric normalization") {
    Matrix two(2, 2);
    two << 0, 1, 1, 0;
    SparseWeights n2 = normalize_symmetric(SparseWeights::from_dense(two));
    CHECK(n2.at(0, 1) == 1.0);

    Matrix k3 = Matrix::Ones(3, 3) - Matrix::Identity(3, 3);
    SparseWeights n3 = normalize_symmetric(SparseWeights::from_dense(k3));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) CHECK(n3.at(i, j) == doctest::Approx(0.5).epsilon(1e-15));

    Matrix iso = Matrix::Zero(3, 3);
    iso(0, 1) = iso(1, 0) = 1.0;
    CHECK_THROWS_WITH_AS(normalize_symmetric(SparseWeights::from_dense(iso)), doctest::Contains("isolated vertex 2"),
                         Error);
    CHECK_NOTHROW(normalize_symmetric(SparseWeights::from_dense(iso), true));

    // degrees recomputed from the stored values
    Rng rng(2);
    SparseWeights w = build_weight_matrix(random_points(40, 3, rng), 5, FixedSigma{1.0});
    double maxd = 0.0;
    for (int i = 0; i < w.size(); ++i) {
        double d = 0.0;
        for (long k = w.row_begin(i); k < w.row_end(i); ++k) d += w.values()[k];
        CHECK(w.degree(i) == doctest::Approx(d).epsilon(1e-14));
        maxd = std::max(maxd, d);
    }
    CHECK(w.max_degree() == doctest::Approx(maxd).epsilon(1e-14));
    CHECK(std::isfinite(maxd));
}

TEST_CASE("build_weight_matrix") {
    Matrix two(2, 2);
    two << 0.0, 0.0, 1.0, 0.0;
    SparseWeights w = build_weight_matrix(two, 1, FixedSigma{0.5});
    CHECK(w.nnz() == 2);
    CHECK(w.at(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w.is_symmetric());

    Rng rng(3);
    Matrix x = random_points(60, 2, rng);
    SparseWeights a = build_weight_matrix(x, 7, FixedSigma{0.7});
    CHECK(a.is_symmetric());
    CHECK(a == build_weight_matrix(x, 7, FixedSigma{0.7}));
    for (int i = 0; i < a.size(); ++i) CHECK(a.at(i, i) == 0.0);

    CHECK_THROWS_AS(build_weight_matrix(x, 0, FixedSigma{0.7}), Error);
    CHECK_THROWS_AS(build_weight_matrix(x, 5, FixedSigma{-1.0}), Error);
}

TEST_CASE("laplacian") {
    Matrix two(2, 2);
    two << 0, 1, 1, 0;
    Matrix l = graph_laplacian(SparseWeights::from_dense(two));
    Matrix expect(2, 2);
    expect << 1, -1, -1, 1;
    CHECK(l == expect);
    SpectralDecomposition e = symmetric_eigendecomposition(l);
    CHECK(e.eigenvalues(0) == doctest::Approx(0.0));
    CHECK(e.eigenvalues(1) == doctest::Approx(2.0));
    CHECK(std::abs(e.eigenvectors(0, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(e.eigenvectors(0, 1) * e.eigenvectors(1, 1) == doctest::Approx(-0.5));

    Rng rng(4);
    SparseWeights w = build_weight_matrix(random_points(30, 2, rng), 4, FixedSigma{1.0});
    Matrix lap = graph_laplacian(w);
    CHECK((lap * Vector::Ones(30)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("connected components") {
    Matrix k4 = Matrix::Ones(4, 4) - Matrix::Identity(4, 4);
    CHECK(component_count(connected_components(SparseWeights::from_dense(k4))) == 1);
    Matrix pairs = Matrix::Zero(4, 4);
    pairs(0, 1) = pairs(1, 0) = pairs(2, 3) = pairs(3, 2) = 1.0;
    std::vector<int> c = connected_components(SparseWeights::from_dense(pairs));
    CHECK(component_count(c) == 2);
    CHECK(c[0] == c[1]);
    CHECK(c[2] == c[3]);
    CHECK(c[0] != c[2]);

    Rng rng(0);
    PointSet xor_pts = gen_xor(rng);
    std::vector<int> comp = connected_components(build_weight_matrix(xor_pts.coords, 20, FixedSigma{0.5}));
    CHECK(component_count(comp) == 4);
    for (int m = 0; m < 4; ++m)
        for (int i = 0; i < 100; ++i) CHECK(comp[m * 100 + i] == comp[m * 100]);
}

TEST_CASE("jacobi eigensolver") {
    Matrix d = Vector(Eigen::Vector3d(3, 1, 2)).asDiagonal();
    SpectralDecomposition e = symmetric_eigendecomposition(d);
    CHECK(e.eigenvalues(0) == 1.0);
    CHECK(e.eigenvalues(1) == 2.0);
    CHECK(e.eigenvalues(2) == 3.0);
    CHECK(std::abs(e.eigenvectors(1, 0)) == 1.0);

    Rng rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix a = random_points(10, 10, rng);
        a = (a + a.transpose()).eval();
        SpectralDecomposition s = symmetric_eigendecomposition(a);
        Matrix rec = s.eigenvectors * s.eigenvalues.asDiagonal() * s.eigenvectors.transpose();
        CHECK((rec - a).norm() < 1e-12 * a.norm());
        CHECK((s.eigenvectors.transpose() * s.eigenvectors - Matrix::Identity(10, 10)).norm() < 1e-12);
        // independent oracle
        Eigen::SelfAdjointEigenSolver<Matrix> ref(a);
        CHECK((s.eigenvalues - ref.eigenvalues()).cwiseAbs().maxCoeff() < 1e-11);
    }
    CHECK_THROWS_WITH_AS(symmetric_eigendecomposition(Matrix::Zero(20, 20), 10), doctest::Contains("power-iteration"),
                         Error);

    Matrix m(2, 2);
    m << -3, 0, 0, 2;
    CHECK(spectral_radius(m) == 3.0);
    CHECK(spectral_radius(Matrix::Identity(4, 4)) == 1.0);
}

TEST_CASE("restrict_and_normalize") {
    Rng rng(7);
    SparseWeights w = build_weight_matrix(random_points(30, 2, rng), 6, FixedSigma{1.0});
    std::vector<int> all = iota_indices(30);
    SparseWeights r = restrict_and_normalize(w, all);
    CHECK(r.is_symmetric());
    std::vector<int> half;
    for (int i = 0; i < 30; i += 2) half.push_back(i);
    SparseWeights h = restrict_and_normalize(w, half);
    CHECK(h.size() == 15);
    CHECK(h.is_symmetric());
}

TEST_CASE("triplets merge duplicates") {
    SparseWeights s = SparseWeights::from_triplets(3, {{0, 1, 0.25}, {1, 0, 0.5}, {0, 1, 0.25}, {1, 0, 0.0}});
    CHECK(s.at(0, 1) == 0.5);
    CHECK(s.at(1, 0) == 0.5);
    CHECK(s.is_symmetric());
    CHECK_THROWS_AS(SparseWeights::from_triplets(2, {{0, 2, 1.0}}), Error);
    CHECK_THROWS_AS(SparseWeights::from_triplets(2, {{0, 1, -1.0}}), Error);
}
