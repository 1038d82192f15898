#include "doctest.h"

#include "diffres/fewshot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

using namespace diffres;

namespace {

Matrix random_matrix(int n, int d, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    return x;
}

}  // namespace

TEST_CASE("center and normalize") {
    Rng rng(1);
    Matrix f = random_matrix(7, 4, rng);
    Matrix c = center_normalize(f, Vector::Constant(4, 0.2));
    for (int i = 0; i < 7; ++i) CHECK(std::abs(c.row(i).norm() - 1.0) <= 1e-12);

    Matrix unit(2, 2);
    unit << 0.6, 0.8, -1.0, 0.0;
    CHECK((center_normalize(unit, Vector::Zero(2)) - unit).norm() < 1e-15);

    Matrix hand(1, 2);
    hand << 4.0, 5.0;
    Matrix h = center_normalize(hand, Eigen::Vector2d(1.0, 1.0));
    CHECK(h(0, 0) == doctest::Approx(0.6));
    CHECK(h(0, 1) == doctest::Approx(0.8));

    CHECK_THROWS_AS(center_normalize(hand, Eigen::Vector2d(4.0, 5.0)), Error);
}

TEST_CASE("cross-domain shift") {
    Rng rng(2);
    Matrix s = random_matrix(5, 3, rng), q = random_matrix(9, 3, rng);
    Matrix shifted = cross_domain_shift(s, q);
    CHECK((shifted.colwise().mean() - s.colwise().mean()).norm() <= 1e-12);

    Matrix moved = s.rowwise() + Eigen::RowVector3d(1.0, -2.0, 0.5);
    Matrix back = cross_domain_shift(s, moved);
    CHECK((back - s).norm() < 1e-12);

    Matrix same = s;
    CHECK((cross_domain_shift(s, same) - s).norm() < 1e-15);
}

TEST_CASE("prototype rectification") {
    Matrix support(2, 2);
    support << 1.0, 0.0, 0.0, 1.0;
    std::vector<int> labels{0, 1};
    Matrix protos = class_prototypes(support, labels, 2);
    CHECK(protos == support);
    CHECK(rectify_prototypes(support, labels, Matrix(0, 2), protos) == support);

    Matrix ident(3, 2);
    ident << 0.3, 0.4, 0.3, 0.4, 0.3, 0.4;
    Matrix p1(1, 2);
    p1 << 0.3, 0.4;
    CHECK((rectify_prototypes(ident.topRows(1), {0}, ident.bottomRows(2), p1) - p1).norm() < 1e-15);

    // brute-force evaluation of the softmax(cos)-weighted mean over support and pre-classified queries
    Matrix q(2, 2);
    q << 2.0, 0.5, 0.2, 1.0;  // pre-classified as class 0 and class 1
    Matrix r = rectify_prototypes(support, labels, q, protos);
    auto cosine = [](Eigen::RowVectorXd a, Eigen::RowVectorXd b) { return a.dot(b) / (a.norm() * b.norm()); };
    const double a0 = std::exp(cosine(support.row(0), protos.row(0)));
    const double b0 = std::exp(cosine(q.row(0), protos.row(0)));
    Eigen::RowVectorXd m0 = (a0 * support.row(0) + b0 * q.row(0)) / (a0 + b0);
    CHECK((r.row(0) - m0).norm() < 1e-14);
    const double a1 = std::exp(cosine(support.row(1), protos.row(1)));
    const double b1 = std::exp(cosine(q.row(1), protos.row(1)));
    Eigen::RowVectorXd m1 = (a1 * support.row(1) + b1 * q.row(1)) / (a1 + b1);
    CHECK((r.row(1) - m1).norm() < 1e-14);
}

TEST_CASE("nearest prototype") {
    Matrix protos(3, 2);
    protos << 0, 0, 1, 0, 0, 1;
    CHECK(nearest_prototype(protos, protos) == std::vector<int>{0, 1, 2});
    Matrix mid(1, 2);
    mid << 0.5, 0.0;  // tie between classes 0 and 1
    CHECK(nearest_prototype(mid, protos)[0] == 0);

    // one shot per class: same as 1-NN over the support
    Rng rng(3);
    Matrix support = random_matrix(5, 4, rng), query = random_matrix(30, 4, rng);
    std::vector<int> pred = nearest_prototype(query, class_prototypes(support, {0, 1, 2, 3, 4}, 5));
    for (int i = 0; i < 30; ++i) {
        int best = 0;
        for (int s = 1; s < 5; ++s)
            if ((query.row(i) - support.row(s)).norm() < (query.row(i) - support.row(best)).norm()) best = s;
        CHECK(pred[i] == best);
    }

    BankParams far{5, 1, 8, 40, 10.0, 0.0, 0.3};
    FeatureBank bank = gen_feature_bank(far, rng);
    double acc = 0.0;
    std::vector<Episode> eps = sample_episodes(bank, 5, 1, 15, 200, rng);
    for (const Episode& e : eps) {
        Matrix p = class_prototypes(e.support, e.support_labels, 5);
        acc += prediction_accuracy(nearest_prototype(e.query, p), e.query_labels) / eps.size();
    }
    CHECK(acc >= 0.99);
}

TEST_CASE("label propagation") {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
        Matrix q = random_matrix(12, 3, rng), p = random_matrix(4, 3, rng);
        SparseWeights w = build_weight_matrix(q, 4, AdaptiveSigma{3});
        LabelPropagation lp = laplacian_label_propagation(q, p, w, 0.0);
        CHECK(lp.predictions == nearest_prototype(q, p));

        LabelPropagation on = laplacian_label_propagation(q, p, w, 0.8);
        for (size_t k = 1; k < on.objective.size(); ++k) CHECK(on.objective[k] <= on.objective[k - 1] + 1e-12);
    }

    Matrix twin = random_matrix(6, 2, rng);
    twin.row(5) = twin.row(4);
    Matrix p = random_matrix(3, 2, rng);
    // graph with a symmetric role for rows 4 and 5
    std::vector<std::tuple<int, int, double>> tr;
    for (int i = 0; i < 4; ++i)
        for (int j : {4, 5}) {
            tr.emplace_back(i, j, 0.3);
            tr.emplace_back(j, i, 0.3);
        }
    tr.emplace_back(0, 1, 0.5);
    tr.emplace_back(1, 0, 0.5);
    SparseWeights sw = SparseWeights::from_triplets(6, tr);
    // updating row 4 before row 5 breaks exact symmetry only through the sweep order; the fixed point is shared
    LabelPropagation lp = laplacian_label_propagation(twin, p, sw, 0.5, 200, 1e-14);
    CHECK((lp.assignments.row(4) - lp.assignments.row(5)).norm() < 1e-10);
    CHECK(lp.predictions[4] == lp.predictions[5]);
}

TEST_CASE("label propagation against exhaustive search") {
    // Large distances make the entropy term negligible, so the relaxed minimizer rounds to the
    // best hard labeling of  sum y.a + (lambda/2) sum w |y_i - y_j|^2  whenever that optimum is clear.
    Rng rng(5);
    int checked = 0;
    for (int t = 0; t < 40; ++t) {
        const int n = 10;
        Matrix p(2, 2);
        p << -1.0, 0.0, 1.0, 0.0;
        Matrix q = random_matrix(n, 2, rng) * 0.8;
        SparseWeights w = build_weight_matrix(q, 3, FixedSigma{1.0});
        const double scale = 40.0, lambda = 20.0;
        Matrix qs = q * std::sqrt(scale), ps = p * std::sqrt(scale);
        Matrix a(n, 2);
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < 2; ++c) a(i, c) = (qs.row(i) - ps.row(c)).squaredNorm();

        double best = std::numeric_limits<double>::infinity(), second = best;
        int best_mask = 0;
        for (int mask = 0; mask < (1 << n); ++mask) {
            double e = 0.0;
            for (int i = 0; i < n; ++i) e += a(i, (mask >> i) & 1);
            for (int i = 0; i < n; ++i)
                for (long k = w.row_begin(i); k < w.row_end(i); ++k)
                    if (((mask >> i) & 1) != ((mask >> w.cols()[k]) & 1)) e += lambda * w.values()[k];
            if (e < best) {
                second = best;
                best = e;
                best_mask = mask;
            } else if (e < second) {
                second = e;
            }
        }
        if (second - best < 5.0) continue;
        LabelPropagation lp = laplacian_label_propagation(qs, ps, w, lambda, 500, 1e-12);
        for (int i = 0; i < n; ++i) CHECK(lp.predictions[i] == ((best_mask >> i) & 1));
        ++checked;
    }
    CHECK(checked >= 20);
}

TEST_CASE("episode sampling") {
    Rng rng(6);
    BankParams bp{5, 2, 4, 12, 0.5, 0.4, 0.5};
    FeatureBank bank = gen_feature_bank(bp, rng);
    REQUIRE(bank.by_class.size() == 5);

    // every class fully partitioned into support and query
    Episode e = sample_episodes(bank, 5, 2, 10, 1, rng)[0];
    for (int w = 0; w < 5; ++w) {
        const Matrix& pts = bank.by_class[e.classes[w]];
        std::vector<bool> used(12, false);
        auto mark = [&](Eigen::RowVectorXd row) {
            for (int i = 0; i < 12; ++i)
                if (!used[i] && (pts.row(i) - row).norm() == 0.0) {
                    used[i] = true;
                    return;
                }
            FAIL("row not found in its class");
        };
        for (int k = 0; k < 2; ++k) mark(e.support.row(w * 2 + k));
        for (int k = 0; k < 10; ++k) mark(e.query.row(w * 10 + k));
        CHECK(std::count(used.begin(), used.end(), true) == 12);
    }

    Rng a(7), b(7);
    std::vector<Episode> ea = sample_episodes(bank, 3, 1, 5, 20, a), eb = sample_episodes(bank, 3, 1, 5, 20, b);
    for (int k = 0; k < 20; ++k) {
        CHECK(ea[k].support == eb[k].support);
        CHECK(ea[k].query == eb[k].query);
    }

    // class frequencies over 10k 2-way episodes: chi-square with 4 dof below the 0.999 quantile
    std::vector<double> counts(5, 0.0);
    for (const Episode& ep : sample_episodes(bank, 2, 1, 1, 10000, rng))
        for (int c : ep.classes) counts[c] += 1.0;
    const double expect = 2.0 * 10000 / 5;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expect) * (c - expect) / expect;
    CHECK(chi2 < 18.47);

    CHECK_THROWS_AS(sample_episodes(bank, 5, 5, 10, 1, rng), Error);
}

TEST_CASE("few-shot method degeneracies") {
    Rng rng(8);
    FeatureBank bank = gen_feature_bank({}, rng);
    std::vector<Episode> eps = sample_episodes(bank, 5, 1, 15, 5, rng);
    FewShotConfig cfg;
    cfg.base_mean = bank.mean();
    cfg.epochs = 20;
    for (const Episode& e : eps) {
        FewShotConfig off = cfg;
        off.steps = 0;
        CHECK(run_episode(Method::InternalCD, e, off, 11).predictions ==
              run_episode(Method::Convection, e, cfg, 11).predictions);
        off = cfg;
        off.lambda = 0.0;
        CHECK(run_episode(Method::Diffusion, e, off, 3).predictions ==
              run_episode(Method::NearestPrototype, e, cfg, 3).predictions);
        EpisodeOutcome o = run_episode(Method::InternalCD, e, cfg, 5);
        CHECK(o.accuracy >= 0.0);
        CHECK(o.accuracy <= 1.0);
    }
    CHECK(parse_method(method_name(Method::ExternalCD)) == Method::ExternalCD);
    CHECK_THROWS_AS(parse_method("Bogus"), Error);

    Summary s = summarize({0.5, 0.7});
    CHECK(s.mean == doctest::Approx(0.6));
    CHECK(s.n == 2);
    CHECK(s.ci95 == doctest::Approx(1.96 * std::sqrt(0.02) / std::sqrt(2.0)));
}
