#include "doctest.h"

#include "diffres/datasets.hpp"
#include "diffres/theory.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

using namespace diffres;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("diffres_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("synthetic generators") {
    Rng rng(1);
    PointSet x = gen_xor(rng);
    REQUIRE(x.size() == 400);
    const double cx[4] = {0, 0, 2, 2}, cy[4] = {0, 2, 0, 2};
    const int cls[4] = {0, 1, 1, 0};
    for (int i = 0; i < 400; ++i) {
        const int m = i / 100;
        CHECK(std::hypot(x.coords(i, 0) - cx[m], x.coords(i, 1) - cy[m]) <= 0.75);
        CHECK(x.labels[i] == cls[m]);
    }
    StructuredDataset xs = xor_structure(x);
    CHECK(xs.num_subsets() == 4);
    CHECK(xs.point_labels() == x.labels);

    PointSet c = gen_circle(rng);
    CHECK(c.size() == 1000);
    CHECK(c.num_classes() == 2);
    PointSet m = gen_moon(rng);
    CHECK(m.size() == 1000);
    PointSet s = gen_spiral(rng);
    CHECK(s.size() == 1000);
    CHECK(std::count(s.labels.begin(), s.labels.end(), 1) == 500);

    Rng a(5), b(5);
    CHECK(gen_synthetic("spiral", a).coords == gen_synthetic("spiral", b).coords);
    CHECK_THROWS_AS(gen_synthetic("torus", a), Error);
}

TEST_CASE("generator envelopes at six noise deviations") {
    Rng rng(7);
    PointSet c = gen_circle(rng);
    for (int i = 0; i < c.size(); ++i) {
        const double r = c.coords.row(i).norm(), target = c.labels[i] == 0 ? 1.0 : 2.0;
        CHECK(std::abs(r - target) <= 6.0 * 0.05 * std::sqrt(2.0));
    }
    PointSet m = gen_moon(rng);
    for (int i = 0; i < m.size(); ++i) {
        Eigen::RowVector2d center = m.labels[i] == 0 ? Eigen::RowVector2d(0.0, 0.0) : Eigen::RowVector2d(1.0, 0.5);
        CHECK(std::abs((m.coords.row(i) - center).norm() - 1.0) <= 6.0 * 0.05 * std::sqrt(2.0));
        const double side = m.coords(i, 1) - center(1);
        CHECK((m.labels[i] == 0 ? side : -side) >= -6.0 * 0.05);
    }
    PointSet s = gen_spiral(rng);
    for (int i = 0; i < s.size(); ++i) {
        const double r = s.coords.row(i).norm();
        CHECK(r >= 1.0 + std::numbers::pi / 4.0 - 6.0 * 0.1 * std::sqrt(2.0));
        CHECK(r <= 1.0 + 7.0 * std::numbers::pi / 4.0 + 6.0 * 0.1 * std::sqrt(2.0));
    }
}

TEST_CASE("graph preprocessing on a toy file") {
    fs::path dir = scratch_dir("toy");
    write_file(dir / "edges.txt", "# src dst\n0 1\n");
    write_file(dir / "features.csv", "1,3\n2,2\n");
    write_file(dir / "labels.csv", "0\n1\n");
    GraphDataset ds = load_graph_dataset((dir / "edges.txt").string(), (dir / "features.csv").string(),
                                         (dir / "labels.csv").string());
    // A + I = ones(2), degrees 2 -> every entry 1/2
    REQUIRE(ds.size() == 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(ds.adjacency.at(i, j) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(ds.edge_count == 1);
    CHECK(ds.features(0, 0) == 0.25);
    CHECK(ds.features(1, 1) == 0.5);

    // export then reload is a fixed point
    export_graph_dataset(ds, (dir / "e2.txt").string(), (dir / "f2.csv").string(), (dir / "l2.csv").string());
    GraphDataset again =
        load_graph_dataset((dir / "e2.txt").string(), (dir / "f2.csv").string(), (dir / "l2.csv").string());
    CHECK(again.adjacency == ds.adjacency);
    CHECK((again.features - ds.features).norm() < 1e-15);

    write_file(dir / "bad.txt", "0 1\n0 x\n");
    CHECK_THROWS_WITH_AS(load_graph_dataset((dir / "bad.txt").string(), (dir / "features.csv").string(),
                                            (dir / "labels.csv").string()),
                         doctest::Contains(":2:"), Error);
}

TEST_CASE("undirected closure and largest component") {
    Matrix f = Matrix::Ones(5, 2);
    // directed edge 0->1, a triangle 2-3-4
    GraphDataset ds = preprocess_graph(5, {{0, 1}, {2, 3}, {3, 4}, {4, 2}}, f, {0, 0, 1, 1, 1});
    CHECK(ds.size() == 3);
    CHECK(ds.original_ids == std::vector<int>{2, 3, 4});
    CHECK(ds.edge_count == 3);
    CHECK(ds.adjacency.is_symmetric());

    GraphDataset pair = preprocess_graph(2, {{0, 1}}, Matrix::Ones(2, 2), {0, 1});
    CHECK(pair.adjacency.at(1, 0) == pair.adjacency.at(0, 1));
    CHECK(pair.adjacency.at(1, 0) > 0.0);

    Matrix zero = Matrix::Zero(2, 2);
    GraphDataset z = preprocess_graph(2, {{0, 1}}, zero, {0, 1});
    CHECK(z.zero_feature_rows == 2);
}

TEST_CASE("graph splits") {
    std::vector<int> labels;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 70; ++i) labels.push_back(c);
    Rng rng(2);
    GraphSplit s = sample_graph_split(labels, rng);
    CHECK(s.train.size() == 60);
    CHECK(s.val.size() == 90);
    std::set<int> all;
    for (auto* part : {&s.train, &s.val, &s.test})
        for (int i : *part) CHECK(all.insert(i).second);
    CHECK(all.size() == labels.size());
    for (int c = 0; c < 3; ++c) CHECK(std::count_if(s.train.begin(), s.train.end(), [&](int i) { return labels[i] == c; }) == 20);

    // the full protocol's split count is just repeated sampling
    std::set<std::vector<int>> distinct;
    for (int k = 0; k < 100; ++k) distinct.insert(sample_graph_split(labels, rng).train);
    CHECK(distinct.size() == 100);

    std::vector<int> small(30, 0);
    CHECK_THROWS_AS(sample_graph_split(small, rng), Error);
}

TEST_CASE("stochastic block model") {
    Rng rng(3);
    SbmParams iso;
    iso.p_out = 0.0;
    iso.p_in = 0.3;
    iso.n_per = 30;
    // with no cross edges the largest component lies inside one class
    GraphDataset a = gen_sbm(iso, rng);
    CHECK(a.num_classes() == 1);

    int connected = 0;
    for (int s = 0; s < 100; ++s) {
        Rng r(s);
        GraphDataset d = gen_sbm({}, r);
        connected += d.size() == 400;
    }
    CHECK(connected >= 95);

    SbmParams flat;
    flat.p_in = flat.p_out = 0.05;
    Rng r2(4);
    GraphDataset f = gen_sbm(flat, r2);
    long same = 0, total = 0;
    for (int i = 0; i < f.size(); ++i)
        for (long k = f.adjacency.row_begin(i); k < f.adjacency.row_end(i); ++k) {
            const int j = f.adjacency.cols()[k];
            if (j == i) continue;
            ++total;
            same += f.labels[i] == f.labels[j];
        }
    // four equal classes: about a quarter of edges stay inside a class
    CHECK(double(same) / total == doctest::Approx(0.25).epsilon(0.3));
}

TEST_CASE("structured cluster generator") {
    Rng rng(5);
    for (int t = 0; t < 5; ++t) {
        StructuredDataset ds = gen_structured_clusters(2, 1 + t % 3, 2 + t % 2, 15, 1.0, 4.0 + t, rng);
        StructuredStats st = structured_stats(ds);
        CHECK(st.D <= 1.0);
        CHECK(st.L >= 4.0 + t);
        CHECK(ds.num_subsets() == 2 * (1 + t % 3));
    }
}
