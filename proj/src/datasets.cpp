#include "diffres/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace diffres {

namespace {

constexpr double kPi = std::numbers::pi;

void add_noise(Matrix& x, double sigma, Rng& rng) {
    std::normal_distribution<double> n(0.0, sigma);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) += n(rng);
}

}  // namespace

PointSet gen_xor(Rng& rng, const XorParams& p) {
    const double cx[4] = {0, 0, 2, 2}, cy[4] = {0, 2, 0, 2};
    const int lab[4] = {0, 1, 1, 0};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointSet ps{Matrix(4 * p.n_per, 2), std::vector<int>(4 * p.n_per)};
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < p.n_per; ++i) {
            double r = p.radius * std::sqrt(u(rng));
            double t = 2.0 * kPi * u(rng);
            int row = c * p.n_per + i;
            ps.coords(row, 0) = cx[c] + r * std::cos(t);
            ps.coords(row, 1) = cy[c] + r * std::sin(t);
            ps.labels[row] = lab[c];
        }
    return ps;
}

StructuredDataset xor_structure(const PointSet& xor_points, int n_per) {
    StructuredDataset ds{xor_points.coords, std::vector<int>(xor_points.size()), {0, 1, 1, 0}};
    for (int i = 0; i < xor_points.size(); ++i) ds.subset[i] = i / n_per;
    ds.validate();
    return ds;
}

PointSet gen_moon(Rng& rng, const MoonParams& p) {
    std::uniform_real_distribution<double> u(0.0, kPi);
    PointSet ps{Matrix(2 * p.n_per, 2), std::vector<int>(2 * p.n_per)};
    for (int i = 0; i < p.n_per; ++i) {
        double t = u(rng);
        ps.coords.row(i) << std::cos(t), std::sin(t);
        ps.labels[i] = 0;
    }
    for (int i = 0; i < p.n_per; ++i) {
        double t = u(rng);
        ps.coords.row(p.n_per + i) << 1.0 - std::cos(t), 0.5 - std::sin(t);
        ps.labels[p.n_per + i] = 1;
    }
    add_noise(ps.coords, p.noise, rng);
    return ps;
}

PointSet gen_circle(Rng& rng, const CircleParams& p) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
    PointSet ps{Matrix(2 * p.n_per, 2), std::vector<int>(2 * p.n_per)};
    const double radius[2] = {p.inner, p.outer};
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < p.n_per; ++i) {
            double t = u(rng);
            ps.coords.row(c * p.n_per + i) << radius[c] * std::cos(t), radius[c] * std::sin(t);
            ps.labels[c * p.n_per + i] = c;
        }
    add_noise(ps.coords, p.noise, rng);
    return ps;
}

// r = s (a + b theta) with s = +1 for class 0 and -1 for class 1.
PointSet gen_spiral(Rng& rng, const SpiralParams& p) {
    if (!(p.theta_max > p.theta_min)) throw Error("spiral needs theta_max > theta_min");
    std::uniform_real_distribution<double> u(p.theta_min, p.theta_max);
    PointSet ps{Matrix(2 * p.n_per, 2), std::vector<int>(2 * p.n_per)};
    for (int c = 0; c < 2; ++c) {
        double s = c == 0 ? 1.0 : -1.0;
        for (int i = 0; i < p.n_per; ++i) {
            double t = u(rng);
            double r = s * (p.a + p.b * t);
            ps.coords.row(c * p.n_per + i) << r * std::cos(t), r * std::sin(t);
            ps.labels[c * p.n_per + i] = c;
        }
    }
    add_noise(ps.coords, p.noise, rng);
    return ps;
}

PointSet gen_synthetic(const std::string& name, Rng& rng) {
    if (name == "xor") return gen_xor(rng);
    if (name == "moon") return gen_moon(rng);
    if (name == "circle") return gen_circle(rng);
    if (name == "spiral") return gen_spiral(rng);
    throw Error("unknown synthetic dataset '" + name + "'");
}

int GraphDataset::num_classes() const {
    int k = 0;
    for (int y : labels) k = std::max(k, y + 1);
    return k;
}

GraphDataset preprocess_graph(int n, const std::vector<std::pair<int, int>>& edges, const Matrix& features,
                              const std::vector<int>& labels) {
    if (features.rows() != n || static_cast<int>(labels.size()) != n)
        throw Error("features/labels do not match node count " + std::to_string(n));
    std::set<std::pair<int, int>> undirected;
    for (auto [a, b] : edges) {
        if (a < 0 || b < 0 || a >= n || b >= n) throw Error("edge references unknown node");
        if (a == b) continue;
        undirected.insert({std::min(a, b), std::max(a, b)});
    }
    std::vector<std::tuple<int, int, double>> t;
    for (auto [a, b] : undirected) {
        t.emplace_back(a, b, 1.0);
        t.emplace_back(b, a, 1.0);
    }
    SparseWeights raw = SparseWeights::from_triplets(n, t);

    std::vector<int> comp = connected_components(raw);
    std::vector<int> sizes(component_count(comp), 0);
    for (int c : comp) sizes[c]++;
    int largest = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

    GraphDataset ds;
    std::vector<int> pos(n, -1);
    for (int i = 0; i < n; ++i)
        if (comp[i] == largest) {
            pos[i] = static_cast<int>(ds.original_ids.size());
            ds.original_ids.push_back(i);
        }
    const int m = static_cast<int>(ds.original_ids.size());
    std::vector<std::tuple<int, int, double>> kept;
    for (auto [a, b] : undirected)
        if (pos[a] >= 0 && pos[b] >= 0) {
            kept.emplace_back(pos[a], pos[b], 1.0);
            kept.emplace_back(pos[b], pos[a], 1.0);
            ds.edge_count++;
        }
    ds.adjacency = normalize_symmetric(SparseWeights::from_triplets(m, kept).with_self_loops(1.0));

    ds.features = select_rows(features, ds.original_ids);
    for (int i = 0; i < m; ++i) {
        double s = ds.features.row(i).cwiseAbs().sum();
        if (s > 0.0) {
            ds.features.row(i) /= s;
        } else {
            ds.zero_feature_rows++;
        }
    }
    if (ds.zero_feature_rows > 0)
        std::cerr << "warning: " << ds.zero_feature_rows << " all-zero feature rows left unnormalized\n";
    ds.labels.resize(m);
    for (int i = 0; i < m; ++i) ds.labels[i] = labels[ds.original_ids[i]];
    return ds;
}

namespace {

std::vector<std::string> data_lines(const std::string& path, std::vector<int>& line_numbers) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::string> out;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        out.push_back(line);
        line_numbers.push_back(no);
    }
    return out;
}

std::vector<double> parse_csv_numbers(const std::string& line, const std::string& path, int no) {
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            size_t used = 0;
            vals.push_back(std::stod(cell, &used));
            if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw Error(path + ":" + std::to_string(no) + ": malformed value '" + cell + "'");
        }
    }
    return vals;
}

}  // namespace

GraphDataset load_graph_dataset(const std::string& edge_path, const std::string& feature_path,
                                const std::string& label_path) {
    std::vector<int> fno, lno, eno;
    auto flines = data_lines(feature_path, fno);
    const int n = static_cast<int>(flines.size());
    if (n == 0) throw Error(feature_path + ": no feature rows");
    Matrix features;
    for (int i = 0; i < n; ++i) {
        auto v = parse_csv_numbers(flines[i], feature_path, fno[i]);
        if (i == 0) features.resize(n, static_cast<Eigen::Index>(v.size()));
        if (static_cast<Eigen::Index>(v.size()) != features.cols())
            throw Error(feature_path + ":" + std::to_string(fno[i]) + ": inconsistent column count");
        for (size_t j = 0; j < v.size(); ++j) features(i, j) = v[j];
    }

    auto llines = data_lines(label_path, lno);
    if (static_cast<int>(llines.size()) != n) throw Error(label_path + ": expected " + std::to_string(n) + " labels");
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        auto v = parse_csv_numbers(llines[i], label_path, lno[i]);
        if (v.size() != 1 || v[0] != std::floor(v[0]))
            throw Error(label_path + ":" + std::to_string(lno[i]) + ": expected one integer label");
        labels[i] = static_cast<int>(v[0]);
    }

    auto elines = data_lines(edge_path, eno);
    std::vector<std::pair<int, int>> edges;
    for (size_t k = 0; k < elines.size(); ++k) {
        std::istringstream ss(elines[k]);
        long a, b;
        std::string rest;
        if (!(ss >> a >> b) || (ss >> rest))
            throw Error(edge_path + ":" + std::to_string(eno[k]) + ": expected 'src dst'");
        if (a < 0 || b < 0 || a >= n || b >= n)
            throw Error(edge_path + ":" + std::to_string(eno[k]) + ": node id out of range");
        edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
    return preprocess_graph(n, edges, features, labels);
}

void export_graph_dataset(const GraphDataset& ds, const std::string& edge_path, const std::string& feature_path,
                          const std::string& label_path) {
    std::ofstream e(edge_path), f(feature_path), l(label_path);
    if (!e || !f || !l) throw Error("cannot write graph dataset files");
    const SparseWeights& w = ds.adjacency;
    for (int i = 0; i < w.size(); ++i)
        for (long k = w.row_begin(i); k < w.row_end(i); ++k)
            if (w.cols()[k] > i) e << i << ' ' << w.cols()[k] << '\n';
    f.precision(17);
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.features.cols(); ++j) f << (j ? "," : "") << ds.features(i, j);
        f << '\n';
    }
    for (int y : ds.labels) l << y << '\n';
}

GraphSplit sample_graph_split(const std::vector<int>& labels, Rng& rng, int n_train, int n_val) {
    std::map<int, std::vector<int>> by_class;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i)
        if (labels[i] >= 0) by_class[labels[i]].push_back(i);
    GraphSplit s;
    for (auto& [c, idx] : by_class) {
        if (static_cast<int>(idx.size()) < n_train + n_val)
            throw Error("class " + std::to_string(c) + " has " + std::to_string(idx.size()) + " nodes, fewer than " +
                        std::to_string(n_train + n_val));
        std::shuffle(idx.begin(), idx.end(), rng);
        s.train.insert(s.train.end(), idx.begin(), idx.begin() + n_train);
        s.val.insert(s.val.end(), idx.begin() + n_train, idx.begin() + n_train + n_val);
        s.test.insert(s.test.end(), idx.begin() + n_train + n_val, idx.end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

GraphDataset gen_sbm(const SbmParams& p, Rng& rng) {
    if (!(p.p_out >= 0.0 && p.p_out <= p.p_in && p.p_in <= 1.0)) throw Error("SBM needs 0 <= p_out <= p_in <= 1");
    const int n = p.classes * p.n_per;
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i / p.n_per;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (u(rng) < (labels[i] == labels[j] ? p.p_in : p.p_out)) edges.emplace_back(i, j);

    std::normal_distribution<double> g(0.0, 1.0);
    Matrix means(p.classes, p.feat_dim);
    for (Eigen::Index i = 0; i < means.size(); ++i) means.data()[i] = p.mean_scale * g(rng);
    Matrix features(n, p.feat_dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p.feat_dim; ++j) features(i, j) = means(labels[i], j) + p.feature_noise * g(rng);
    return preprocess_graph(n, edges, features, labels);
}

StructuredDataset gen_structured_clusters(int k, int l, int d, int n_per, double D_target, double L_target, Rng& rng) {
    if (!(D_target > 0.0) || !(L_target > 0.0)) throw Error("structured clusters need D_target > 0 and L_target > 0");
    if (k < 1 || l < 1 || d < 1 || n_per < 1) throw Error("invalid structured cluster shape");
    const int m = k * l;
    const double radius = 0.5 * D_target;
    const double min_center = D_target + L_target;
    const double side = 2.0 * min_center * std::ceil(std::pow(double(m), 1.0 / d));
    std::uniform_real_distribution<double> box(0.0, side), u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);

    Matrix centers(m, d);
    for (int c = 0; c < m; ++c) {
        int tries = 0;
        for (;;) {
            if (++tries > 100000) throw Error("infeasible structured cluster placement");
            for (int j = 0; j < d; ++j) centers(c, j) = box(rng);
            bool ok = true;
            for (int o = 0; o < c && ok; ++o) ok = (centers.row(c) - centers.row(o)).norm() >= min_center;
            if (ok) break;
        }
    }

    StructuredDataset ds{Matrix(m * n_per, d), std::vector<int>(m * n_per), std::vector<int>(m)};
    for (int c = 0; c < m; ++c) {
        ds.subset_class[c] = c / l;
        for (int i = 0; i < n_per; ++i) {
            Vector dir(d);
            for (int j = 0; j < d; ++j) dir(j) = g(rng);
            double nrm = dir.norm();
            if (nrm == 0.0) dir.setZero(); else dir /= nrm;
            double r = radius * std::pow(u(rng), 1.0 / d);
            ds.coords.row(c * n_per + i) = centers.row(c) + r * dir.transpose();
            ds.subset[c * n_per + i] = c;
        }
    }
    ds.validate();
    return ds;
}

}  // namespace diffres
