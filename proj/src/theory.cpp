#include "diffres/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace diffres {

namespace {

double dist(const Matrix& x, int i, int j, NormConvention conv) {
    double s = (x.row(i) - x.row(j)).squaredNorm();
    return conv == NormConvention::Squared ? s : std::sqrt(s);
}

}  // namespace

std::vector<double> subset_diameters(const StructuredDataset& ds, NormConvention conv) {
    auto members = ds.members();
    std::vector<double> out(members.size(), 0.0);
    for (size_t m = 0; m < members.size(); ++m)
        for (size_t a = 0; a < members[m].size(); ++a)
            for (size_t b = a + 1; b < members[m].size(); ++b)
                out[m] = std::max(out[m], dist(ds.coords, members[m][a], members[m][b], conv));
    return out;
}

StructuredStats structured_stats(const StructuredDataset& ds, NormConvention conv) {
    ds.validate();
    int nonempty = 0;
    for (const auto& m : ds.members()) nonempty += !m.empty();
    if (nonempty < 2) throw Error("distance L is undefined with fewer than two nonempty subsets");
    StructuredStats s;
    for (double d : subset_diameters(ds, conv)) s.D = std::max(s.D, d);
    s.L = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(ds.coords.rows());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (ds.subset[i] != ds.subset[j]) s.L = std::min(s.L, dist(ds.coords, i, j, conv));
    return s;
}

double separability_threshold(int m, int d) {
    if (m < 2 || d < 1) throw Error("threshold needs M >= 2 and d >= 1");
    return m * (m - 1.0) * std::sqrt(std::numbers::pi) * d / 4.0;
}

bool projections_disjoint(const StructuredDataset& ds, const Vector& dir) {
    const int m = ds.num_subsets();
    std::vector<double> lo(m, std::numeric_limits<double>::infinity()), hi(m, -std::numeric_limits<double>::infinity());
    for (int i = 0; i < ds.coords.rows(); ++i) {
        double p = ds.coords.row(i).dot(dir);
        lo[ds.subset[i]] = std::min(lo[ds.subset[i]], p);
        hi[ds.subset[i]] = std::max(hi[ds.subset[i]], p);
    }
    std::vector<int> order;
    for (int s = 0; s < m; ++s)
        if (lo[s] <= hi[s]) order.push_back(s);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return lo[a] < lo[b]; });
    for (size_t k = 1; k < order.size(); ++k)
        if (!(hi[order[k - 1]] < lo[order[k]])) return false;
    return true;
}

namespace {

// Andrew's monotone chain; returns hull vertex indices (all points when fewer than 3).
std::vector<int> hull_2d(const Matrix& x, std::vector<int> idx) {
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return x(a, 0) < x(b, 0) || (x(a, 0) == x(b, 0) && x(a, 1) < x(b, 1));
    });
    if (idx.size() < 3) return idx;
    auto cross = [&](int o, int a, int b) {
        return (x(a, 0) - x(o, 0)) * (x(b, 1) - x(o, 1)) - (x(a, 1) - x(o, 1)) * (x(b, 0) - x(o, 0));
    };
    std::vector<int> h(2 * idx.size());
    size_t k = 0;
    for (size_t i = 0; i < idx.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], idx[i]) <= 0) --k;
        h[k++] = idx[i];
    }
    for (size_t i = idx.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross(h[k - 2], h[k - 1], idx[i - 1]) <= 0) --k;
        h[k++] = idx[i - 1];
    }
    h.resize(k - 1);
    return h;
}

}  // namespace

std::optional<Vector> check_parallel_separable(const StructuredDataset& ds, int n_directions, Rng& rng) {
    ds.validate();
    const int d = static_cast<int>(ds.coords.cols());
    if (d == 2) {
        std::vector<std::vector<int>> hulls;
        for (const auto& m : ds.members())
            if (!m.empty()) hulls.push_back(hull_2d(ds.coords, m));
        // Between consecutive critical angles every cross-subset order is fixed.
        std::vector<double> angles;
        for (size_t a = 0; a < hulls.size(); ++a)
            for (size_t b = a + 1; b < hulls.size(); ++b)
                for (int i : hulls[a])
                    for (int j : hulls[b]) {
                        double vx = ds.coords(i, 0) - ds.coords(j, 0), vy = ds.coords(i, 1) - ds.coords(j, 1);
                        if (vx == 0.0 && vy == 0.0) return std::nullopt;
                        double phi = std::atan2(vy, vx) + 0.5 * std::numbers::pi;
                        phi = std::fmod(phi, std::numbers::pi);
                        if (phi < 0) phi += std::numbers::pi;
                        angles.push_back(phi);
                    }
        std::sort(angles.begin(), angles.end());
        angles.erase(std::unique(angles.begin(), angles.end()), angles.end());
        std::vector<double> probes;
        if (angles.empty()) probes.push_back(0.0);
        for (size_t k = 0; k < angles.size(); ++k) {
            double next = k + 1 < angles.size() ? angles[k + 1] : angles[0] + std::numbers::pi;
            probes.push_back(0.5 * (angles[k] + next));
        }
        for (double t : probes) {
            Vector u(2);
            u << std::cos(t), std::sin(t);
            if (projections_disjoint(ds, u)) return u;
        }
        return std::nullopt;
    }
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < n_directions; ++k) {
        Vector u(d);
        for (int j = 0; j < d; ++j) u(j) = g(rng);
        if (u.norm() == 0.0) continue;
        u.normalize();
        if (projections_disjoint(ds, u)) return u;
    }
    return std::nullopt;
}

namespace {

// beta has first component 1 and is orthogonal to w; false if w is parallel to e_1.
bool make_beta(const Vector& w, Vector& beta) {
    const int d = static_cast<int>(w.size());
    if (d < 2) return false;
    int p = 1;
    for (int k = 2; k < d; ++k)
        if (std::abs(w(k)) > std::abs(w(p))) p = k;
    if (std::abs(w(p)) < 1e-8) return false;
    beta = Vector::Ones(d);
    double s = 0.0;
    for (int k = 0; k < d; ++k)
        if (k != p) s += w(k);
    beta(p) = -s / w(p);
    return true;
}

Vector random_unit(int d, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vector u(d);
    do {
        for (int j = 0; j < d; ++j) u(j) = g(rng);
    } while (u.norm() == 0.0);
    return u.normalized();
}

void apply_piece(Matrix& x, const FlowPiece& piece, const Vector& w, const Vector& beta) {
    const double dt = piece.t1 - piece.t0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double a = x.row(i).dot(w);
        double v = 0.0;
        for (size_t k = 0; k < piece.lambda.size(); ++k) v += piece.lambda[k] * std::max(0.0, a + piece.b[k]);
        if (v != 0.0) x.row(i) += dt * v * beta.transpose();
    }
}

void check_binary(const std::vector<int>& labels) {
    for (int y : labels)
        if (y != 0 && y != 1) throw Error("separating flow needs binary labels");
}

}  // namespace

Matrix apply_flow(const Matrix& points, const FlowSchedule& schedule) {
    Matrix x = points;
    for (const auto& piece : schedule.pieces) apply_piece(x, piece, schedule.w_star, schedule.beta_star);
    return x;
}

FlowSchedule construct_separating_flow(const Matrix& points, const std::vector<int>& labels, double c1, double c2,
                                       Rng& rng, int width) {
    const int n = static_cast<int>(points.rows());
    const int d = static_cast<int>(points.cols());
    if (n < 1 || static_cast<int>(labels.size()) != n) throw Error("flow construction needs labeled points");
    if (width < 1) throw Error("width must be positive");
    if (d < 2) throw Error("flow construction needs d >= 2");
    check_binary(labels);

    FlowSchedule s;
    std::vector<int> order;
    Vector proj;
    bool found = false;
    // Small projection gaps make the solved lambdas huge and cost accuracy, so keep the
    // candidate direction with the widest relative gap.
    double best_gap = 0.0;
    for (int attempt = 0; attempt < 100; ++attempt) {
        Vector w = random_unit(d, rng), beta;
        if (!make_beta(w, beta)) continue;
        Vector p = points * w;
        std::vector<int> ord = iota_indices(n);
        std::sort(ord.begin(), ord.end(), [&](int a, int b) { return p(a) < p(b); });
        const double range = p(ord.back()) - p(ord.front());
        double gap = n > 1 ? std::numeric_limits<double>::infinity() : 1.0;
        for (int k = 1; k < n; ++k) gap = std::min(gap, (p(ord[k]) - p(ord[k - 1])) / (1.0 + range));
        if (gap > 1e-9 && gap > best_gap) {
            best_gap = gap;
            found = true;
            s.w_star = w;
            s.beta_star = beta;
            proj = p;
            order = ord;
        }
    }
    if (!found) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if ((points.row(i) - points.row(j)).norm() == 0.0)
                    throw Error("points " + std::to_string(i) + " and " + std::to_string(j) +
                                " coincide; no direction separates them");
        throw Error("no direction with distinct projections found in 100 attempts");
    }
    s.targets = {{c1, c1}, {c2, c2}};

    std::vector<double> A(n), B(n);
    for (int k = 0; k < n; ++k) A[k] = proj(order[k]);
    B[0] = A[0] - (n > 1 ? (A[n - 1] - A[0]) / n : 1.0);
    for (int k = 1; k < n; ++k) B[k] = 0.5 * (A[k - 1] + A[k]);

    const int layers = (n + width - 1) / width;
    const double dt = 1.0 / layers;
    Matrix x = points;
    for (int layer = 0; layer < layers; ++layer) {
        FlowPiece piece;
        piece.t0 = layer * dt;
        piece.t1 = layer + 1 == layers ? 1.0 : (layer + 1) * dt;
        const int first = layer * width, last = std::min(n, first + width);
        // Lower-triangular system: point k sees units first..k.
        for (int k = first; k < last; ++k) {
            const int i = order[k];
            double target = labels[i] == 0 ? c1 : c2;
            double rhs = target - x(i, 0);
            for (int u = first; u < k; ++u) rhs -= dt * piece.lambda[u - first] * (A[k] - B[u]);
            piece.lambda.push_back(rhs / (dt * (A[k] - B[k])));
            piece.b.push_back(-B[k]);
        }
        apply_piece(x, piece, s.w_star, s.beta_star);
        s.pieces.push_back(std::move(piece));
    }
    return s;
}

FlowSchedule construct_separating_flow(const StructuredDataset& ds, double c1, double c2, Rng& rng) {
    ds.validate();
    check_binary(ds.subset_class);
    const int d = static_cast<int>(ds.coords.cols());
    if (d < 2) throw Error("flow construction needs d >= 2");
    auto members = ds.members();
    for (const auto& m : members)
        if (m.empty()) throw Error("flow construction needs nonempty subsets");

    FlowSchedule s;
    bool found = false;
    for (int attempt = 0; attempt < 100 && !found; ++attempt) {
        auto dir = check_parallel_separable(ds, 10000, rng);
        if (!dir) break;
        s.w_star = *dir;
        found = make_beta(s.w_star, s.beta_star);
        if (!found && d == 2) break;  // the sweep is deterministic
    }
    if (!found) {
        const int m = ds.num_subsets();
        for (int a = 0; a < m; ++a)
            for (int b = a + 1; b < m; ++b) {
                std::vector<int> rows;
                for (int i = 0; i < ds.coords.rows(); ++i)
                    if (ds.subset[i] == a || ds.subset[i] == b) rows.push_back(i);
                Matrix pts = select_rows(ds.coords, rows);
                std::vector<int> lab(rows.size());
                for (size_t r = 0; r < rows.size(); ++r) lab[r] = ds.subset[rows[r]] == b;
                if (!linear_separability(pts, lab).separable)
                    throw Error("subsets " + std::to_string(a) + " and " + std::to_string(b) +
                                " cannot be separated by parallel hyperplanes");
            }
        throw Error("no parallel-hyperplane direction found for the subsets");
    }

    const int m = ds.num_subsets();
    std::vector<double> lo(m, std::numeric_limits<double>::infinity()), hi(m, -std::numeric_limits<double>::infinity());
    for (int i = 0; i < ds.coords.rows(); ++i) {
        double p = ds.coords.row(i).dot(s.w_star);
        lo[ds.subset[i]] = std::min(lo[ds.subset[i]], p);
        hi[ds.subset[i]] = std::max(hi[ds.subset[i]], p);
    }
    std::vector<int> order = iota_indices(m);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return lo[a] < lo[b]; });

    double D = 0.0;
    for (double v : subset_diameters(ds)) D = std::max(D, v);
    const double center[2] = {c1, c1 + std::max(c2 - c1, 3.0 * D)};
    s.targets = {{center[0] - D, center[0] + D}, {center[1] - D, center[1] + D}};

    // Two units with opposite lambda translate every active point by the same amount.
    const double dt = 1.0 / m;
    Matrix x = ds.coords;
    for (int k = 0; k < m; ++k) {
        const int sub = order[k];
        double gap = k == 0 ? std::max(hi[sub] - lo[sub], 1.0) : lo[sub] - hi[order[k - 1]];
        double base = k == 0 ? lo[sub] - gap : hi[order[k - 1]];
        double b1 = base + gap / 3.0, b2 = base + 2.0 * gap / 3.0;
        double mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (int i : members[sub]) {
            mn = std::min(mn, x(i, 0));
            mx = std::max(mx, x(i, 0));
        }
        double shift = center[ds.subset_class[sub]] - 0.5 * (mn + mx);
        double lam = shift / (dt * (b2 - b1));
        FlowPiece piece{k * dt, k + 1 == m ? 1.0 : (k + 1) * dt, {lam, -lam}, {-b1, -b2}};
        apply_piece(x, piece, s.w_star, s.beta_star);
        s.pieces.push_back(std::move(piece));
    }
    return s;
}

namespace {

struct MinNormPoint {
    Vector x;
    std::vector<int> support;
    std::vector<double> weights;
};

// Wolfe's minimum-norm-point algorithm over the convex hull of the columns of p.
MinNormPoint wolfe_min_norm(const Matrix& p) {
    const Eigen::Index n = p.cols();
    double scale = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) scale = std::max(scale, p.col(k).squaredNorm());
    const double eps = 1e-12 * std::max(scale, 1e-300);

    Eigen::Index k0 = 0;
    for (Eigen::Index k = 1; k < n; ++k)
        if (p.col(k).squaredNorm() < p.col(k0).squaredNorm()) k0 = k;
    std::vector<int> s{static_cast<int>(k0)};
    std::vector<double> lam{1.0};
    Vector x = p.col(k0);

    auto combine = [&](const std::vector<double>& c) {
        Vector out = Vector::Zero(p.rows());
        for (size_t i = 0; i < s.size(); ++i) out += c[i] * p.col(s[i]);
        return out;
    };
    auto affine_min = [&]() {
        const int m = static_cast<int>(s.size());
        Matrix kkt = Matrix::Zero(m + 1, m + 1);
        Vector rhs = Vector::Zero(m + 1);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) kkt(i, j) = p.col(s[i]).dot(p.col(s[j]));
            kkt(i, m) = 1.0;
            kkt(m, i) = 1.0;
        }
        rhs(m) = 1.0;
        Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        return std::vector<double>(sol.data(), sol.data() + m);
    };

    for (int iter = 0; iter < 1000; ++iter) {
        Eigen::Index j = 0;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < n; ++k) {
            double v = p.col(k).dot(x);
            if (v < best) {
                best = v;
                j = k;
            }
        }
        if (x.squaredNorm() - best <= eps) break;
        if (std::find(s.begin(), s.end(), static_cast<int>(j)) != s.end()) break;
        s.push_back(static_cast<int>(j));
        lam.push_back(0.0);
        for (int minor = 0; minor < 100; ++minor) {
            std::vector<double> mu = affine_min();
            bool interior = true;
            for (double v : mu) interior = interior && v > 1e-14;
            if (interior) {
                lam = mu;
                break;
            }
            double theta = 1.0;
            for (size_t i = 0; i < mu.size(); ++i)
                if (mu[i] <= 1e-14) theta = std::min(theta, lam[i] / (lam[i] - mu[i]));
            for (size_t i = 0; i < mu.size(); ++i) lam[i] = (1.0 - theta) * lam[i] + theta * mu[i];
            std::vector<int> s2;
            std::vector<double> l2;
            for (size_t i = 0; i < s.size(); ++i)
                if (lam[i] > 1e-14) {
                    s2.push_back(s[i]);
                    l2.push_back(lam[i]);
                }
            double total = 0.0;
            for (double v : l2) total += v;
            for (double& v : l2) v /= total;
            s = std::move(s2);
            lam = std::move(l2);
        }
        x = combine(lam);
    }
    return {x, s, lam};
}

bool certificate_holds(const Matrix& points, const std::vector<int>& labels, const Vector& w, double c) {
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double v = points.row(i).dot(w) + c;
        if (labels[i] == 1 ? !(v > 0.0) : !(v < 0.0)) return false;
    }
    return true;
}

}  // namespace

SeparabilityResult linear_separability(const Matrix& points, const std::vector<int>& labels) {
    check_binary(labels);
    const int n = static_cast<int>(points.rows());
    const int d = static_cast<int>(points.cols());
    std::vector<int> pos, neg;
    for (int i = 0; i < n; ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    SeparabilityResult res;
    if (pos.empty() || neg.empty()) {
        res.separable = true;
        res.normal = Vector::Zero(d);
        res.offset = pos.empty() ? -1.0 : 1.0;
        res.hull_distance = std::numeric_limits<double>::infinity();
        return res;
    }

    // Perceptron on (x, 1); stops at the first certified hyperplane.
    double scale = 1.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, points.row(i).cwiseAbs().maxCoeff());
    Vector w = Vector::Zero(d + 1);
    for (int pass = 0; pass < 2000; ++pass) {
        bool clean = true;
        for (int i = 0; i < n; ++i) {
            double s = labels[i] == 1 ? 1.0 : -1.0;
            Vector z(d + 1);
            z << points.row(i).transpose() / scale, 1.0;
            if (s * w.dot(z) <= 0.0) {
                w += s * z;
                clean = false;
            }
        }
        if (clean) {
            Vector normal = w.head(d) / scale;
            if (certificate_holds(points, labels, normal, w(d))) {
                res.separable = true;
                res.normal = normal;
                res.offset = w(d);
                break;
            }
        }
    }

    // Distance between the two hulls decides the remaining cases.
    Matrix diff(d, pos.size() * neg.size());
    std::vector<std::pair<int, int>> pairs;
    for (int a : pos)
        for (int b : neg) {
            diff.col(pairs.size()) = (points.row(a) - points.row(b)).transpose();
            pairs.emplace_back(a, b);
        }
    MinNormPoint mnp = wolfe_min_norm(diff);
    Vector ap = Vector::Zero(d), bp = Vector::Zero(d);
    for (size_t i = 0; i < mnp.support.size(); ++i) {
        ap += mnp.weights[i] * points.row(pairs[mnp.support[i]].first).transpose();
        bp += mnp.weights[i] * points.row(pairs[mnp.support[i]].second).transpose();
    }
    res.hull_distance = mnp.x.norm();
    if (res.separable) return res;
    if (res.hull_distance > 1e-9 * scale) {
        Vector normal = mnp.x;
        double c = -normal.dot(0.5 * (ap + bp));
        if (certificate_holds(points, labels, normal, c)) {
            res.separable = true;
            res.normal = normal;
            res.offset = c;
            return res;
        }
    }
    res.separable = false;
    res.witness_point = 0.5 * (ap + bp);
    return res;
}

RatioTrace ratio_trace(const StructuredDataset& ds, const SparseWeights& w, double gamma, int steps,
                       NormConvention conv) {
    ds.validate();
    check_stable(w, {gamma, steps, true});
    StructuredDataset cur = ds;
    RatioTrace tr;
    auto record = [&](int step) {
        StructuredStats st = structured_stats(cur, conv);
        tr.step.push_back(step);
        tr.D.push_back(st.D);
        tr.L.push_back(st.L);
        tr.ratio.push_back(st.D > 0.0 ? st.L / st.D : std::numeric_limits<double>::infinity());
        tr.diameters.push_back(subset_diameters(cur, conv));
    };
    record(0);
    for (int s = 1; s <= steps; ++s) {
        cur.coords = diffusion_step(cur.coords, w, gamma);
        record(s);
    }
    return tr;
}

StabilityReport verify_stability(const SparseWeights& w, double gamma) {
    StabilityReport r;
    r.rho = spectral_radius(iteration_matrix(w, gamma));
    r.passes = r.rho <= 1.0 + 1e-9;
    r.gershgorin_lower = std::numeric_limits<double>::infinity();
    r.gershgorin_upper = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < w.size(); ++i) {
        double off = w.degree(i) - w.at(i, i);
        double center = 1.0 - gamma * off;
        r.gershgorin_lower = std::min(r.gershgorin_lower, center - gamma * off);
        r.gershgorin_upper = std::max(r.gershgorin_upper, center + gamma * off);
    }
    return r;
}

}  // namespace diffres
