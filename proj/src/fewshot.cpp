#include "diffres/fewshot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace diffres {

Vector FeatureBank::mean() const {
    Vector m = Vector::Zero(dim());
    long n = 0;
    for (const auto& c : by_class) {
        m += c.colwise().sum().transpose();
        n += c.rows();
    }
    return n ? Vector(m / double(n)) : m;
}

FeatureBank gen_feature_bank(const BankParams& p, Rng& rng) {
    if (p.classes < 1 || p.subclasses < 1 || p.dim < 1 || p.per_class < p.subclasses)
        throw Error("invalid feature bank shape");
    std::normal_distribution<double> g(0.0, 1.0);
    auto draw = [&](double s) {
        Vector v(p.dim);
        for (int j = 0; j < p.dim; ++j) v(j) = s * g(rng);
        return v;
    };
    FeatureBank bank;
    for (int c = 0; c < p.classes; ++c) {
        Vector center = draw(p.class_scale);
        Matrix pts(p.per_class, p.dim);
        for (int s = 0; s < p.subclasses; ++s) {
            Vector sub = center + draw(p.subclass_scale);
            const int begin = s * p.per_class / p.subclasses, end = (s + 1) * p.per_class / p.subclasses;
            for (int i = begin; i < end; ++i) pts.row(i) = (sub + draw(p.point_scale)).transpose();
        }
        bank.by_class.push_back(std::move(pts));
    }
    return bank;
}

FeatureBank read_feature_bank(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::map<int, std::vector<std::vector<double>>> rows;
    std::string line;
    int no = 0;
    size_t width = 0;
    while (std::getline(in, line)) {
        ++no;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                if (vals.empty() && no == 1) break;  // header
                throw Error(path + ":" + std::to_string(no) + ": malformed value '" + cell + "'");
            }
        }
        if (vals.empty()) continue;
        if (vals.size() < 2) throw Error(path + ":" + std::to_string(no) + ": expected class_id and features");
        if (width == 0) width = vals.size();
        if (vals.size() != width) throw Error(path + ":" + std::to_string(no) + ": inconsistent column count");
        rows[static_cast<int>(vals[0])].emplace_back(vals.begin() + 1, vals.end());
    }
    FeatureBank bank;
    for (auto& [c, r] : rows) {
        Matrix m(r.size(), width - 1);
        for (size_t i = 0; i < r.size(); ++i)
            for (size_t j = 0; j + 1 < width; ++j) m(i, j) = r[i][j];
        bank.by_class.push_back(std::move(m));
    }
    if (bank.by_class.empty()) throw Error(path + ": no feature rows");
    return bank;
}

std::vector<Episode> sample_episodes(const FeatureBank& bank, int n_way, int k_shot, int n_query, int count, Rng& rng) {
    const int classes = static_cast<int>(bank.by_class.size());
    if (n_way < 1 || n_way > classes) throw Error("n_way exceeds the number of classes");
    if (k_shot < 1 || n_query < 1) throw Error("episodes need k_shot >= 1 and n_query >= 1");
    for (const auto& c : bank.by_class)
        if (c.rows() < k_shot + n_query) throw Error("insufficient points in a class for k_shot + n_query");
    std::vector<Episode> out;
    out.reserve(count);
    std::vector<int> cls = iota_indices(classes);
    for (int e = 0; e < count; ++e) {
        std::shuffle(cls.begin(), cls.end(), rng);
        Episode ep;
        ep.n_way = n_way;
        ep.support.resize(n_way * k_shot, bank.dim());
        ep.query.resize(n_way * n_query, bank.dim());
        for (int w = 0; w < n_way; ++w) {
            const Matrix& pts = bank.by_class[cls[w]];
            ep.classes.push_back(cls[w]);
            std::vector<int> idx = iota_indices(static_cast<int>(pts.rows()));
            std::shuffle(idx.begin(), idx.end(), rng);
            for (int k = 0; k < k_shot; ++k) {
                ep.support.row(w * k_shot + k) = pts.row(idx[k]);
                ep.support_labels.push_back(w);
            }
            for (int q = 0; q < n_query; ++q) {
                ep.query.row(w * n_query + q) = pts.row(idx[k_shot + q]);
                ep.query_labels.push_back(w);
            }
        }
        out.push_back(std::move(ep));
    }
    return out;
}

Matrix center_normalize(const Matrix& features, const Vector& base_mean) {
    if (base_mean.size() != features.cols()) throw Error("base mean has the wrong dimension");
    Matrix out = features.rowwise() - base_mean.transpose();
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        double n = out.row(i).norm();
        if (n == 0.0) throw Error("zero vector after centering at row " + std::to_string(i));
        out.row(i) /= n;
    }
    return out;
}

Matrix cross_domain_shift(const Matrix& support, const Matrix& query) {
    if (support.rows() == 0 || query.rows() == 0) throw Error("cross-domain shift needs nonempty sets");
    Eigen::RowVectorXd delta = support.colwise().mean() - query.colwise().mean();
    return query.rowwise() + delta;
}

Matrix class_prototypes(const Matrix& support, const std::vector<int>& labels, int n_way) {
    Matrix m = Matrix::Zero(n_way, support.cols());
    std::vector<int> count(n_way, 0);
    for (Eigen::Index i = 0; i < support.rows(); ++i) {
        m.row(labels[i]) += support.row(i);
        count[labels[i]]++;
    }
    for (int c = 0; c < n_way; ++c) {
        if (count[c] == 0) throw Error("class " + std::to_string(c) + " has no support points");
        m.row(c) /= count[c];
    }
    return m;
}

Matrix rectify_prototypes(const Matrix& support, const std::vector<int>& labels, const Matrix& query,
                          const Matrix& prototypes) {
    const int n_way = static_cast<int>(prototypes.rows());
    std::vector<std::vector<Eigen::RowVectorXd>> members(n_way);
    for (Eigen::Index i = 0; i < support.rows(); ++i) members[labels[i]].push_back(support.row(i));
    if (query.rows() > 0) {
        std::vector<int> pre = nearest_prototype(query, prototypes);
        for (Eigen::Index i = 0; i < query.rows(); ++i) members[pre[i]].push_back(query.row(i));
    }
    Matrix out(n_way, prototypes.cols());
    for (int c = 0; c < n_way; ++c) {
        if (members[c].empty()) throw Error("empty class " + std::to_string(c) + " during rectification");
        Eigen::RowVectorXd m = prototypes.row(c);
        std::vector<double> cosv;
        for (const auto& x : members[c]) {
            double denom = x.norm() * m.norm();
            cosv.push_back(denom > 0.0 ? x.dot(m) / denom : 0.0);
        }
        double top = *std::max_element(cosv.begin(), cosv.end());
        double z = 0.0;
        for (double& v : cosv) z += (v = std::exp(v - top));
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(prototypes.cols());
        for (size_t k = 0; k < members[c].size(); ++k) acc += (cosv[k] / z) * members[c][k];
        out.row(c) = acc;
    }
    return out;
}

namespace {

Matrix squared_distances(const Matrix& x, const Matrix& protos) {
    Matrix d(x.rows(), protos.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index c = 0; c < protos.rows(); ++c) d(i, c) = (x.row(i) - protos.row(c)).squaredNorm();
    return d;
}

}  // namespace

std::vector<int> nearest_prototype(const Matrix& query, const Matrix& prototypes) {
    return argmax_rows(-squared_distances(query, prototypes));
}

double prediction_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size() || pred.empty()) throw Error("prediction/label size mismatch");
    int hit = 0;
    for (size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
    return double(hit) / double(pred.size());
}

double label_propagation_objective(const Matrix& y, const Matrix& dist, const SparseWeights& w, double lambda) {
    double e = (y.array() * dist.array()).sum();
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        for (Eigen::Index c = 0; c < y.cols(); ++c)
            if (y(i, c) > 0.0) e += y(i, c) * std::log(y(i, c));
    for (int i = 0; i < w.size(); ++i)
        for (long k = w.row_begin(i); k < w.row_end(i); ++k) e -= lambda * w.values()[k] * y.row(i).dot(y.row(w.cols()[k]));
    return e;
}

LabelPropagation laplacian_label_propagation(const Matrix& query, const Matrix& prototypes, const SparseWeights& w,
                                             double lambda, int iters, double tol) {
    if (lambda < 0.0) throw Error("lambda must be nonnegative");
    if (w.size() != query.rows()) throw Error("weights must be built over the query set");
    const Matrix dist = squared_distances(query, prototypes);
    LabelPropagation out;
    Matrix scores = -dist;
    out.assignments = softmax_rows(scores);
    out.objective.push_back(label_propagation_objective(out.assignments, dist, w, lambda));
    if (lambda == 0.0) {
        out.converged = true;
    } else {
        for (int it = 0; it < iters; ++it) {
            double change = 0.0;
            for (Eigen::Index i = 0; i < query.rows(); ++i) {
                Eigen::RowVectorXd s = -dist.row(i);
                for (long k = w.row_begin(i); k < w.row_end(i); ++k) {
                    int j = w.cols()[k];
                    if (j != i) s += 2.0 * lambda * w.values()[k] * out.assignments.row(j);
                }
                scores.row(i) = s;
                Eigen::RowVectorXd y = (s.array() - s.maxCoeff()).exp().matrix();
                y /= y.sum();
                change = std::max(change, (y - out.assignments.row(i)).cwiseAbs().maxCoeff());
                out.assignments.row(i) = y;
            }
            out.objective.push_back(label_propagation_objective(out.assignments, dist, w, lambda));
            if (change < tol) {
                out.converged = true;
                break;
            }
        }
    }
    out.predictions = argmax_rows(scores);
    return out;
}

Method parse_method(const std::string& name) {
    if (name == "NearestPrototype") return Method::NearestPrototype;
    if (name == "Diffusion") return Method::Diffusion;
    if (name == "Convection") return Method::Convection;
    if (name == "ExternalCD") return Method::ExternalCD;
    if (name == "InternalCD") return Method::InternalCD;
    throw Error("unknown few-shot method '" + name + "'");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::NearestPrototype: return "NearestPrototype";
        case Method::Diffusion: return "Diffusion";
        case Method::Convection: return "Convection";
        case Method::ExternalCD: return "ExternalCD";
        case Method::InternalCD: return "InternalCD";
    }
    return "?";
}

EpisodeOutcome run_episode(Method method, const Episode& episode, const FewShotConfig& cfg, std::uint64_t seed) {
    Matrix support = episode.support, query = episode.query;
    if (cfg.center) {
        Vector base = cfg.base_mean.size() ? cfg.base_mean : Vector::Zero(support.cols());
        support = center_normalize(support, base);
        query = center_normalize(query, base);
    }
    if (cfg.shift) query = cross_domain_shift(support, query);
    Matrix protos = class_prototypes(support, episode.support_labels, episode.n_way);
    Matrix rectified = rectify_prototypes(support, episode.support_labels, query, protos);

    EpisodeOutcome out;
    if (method == Method::NearestPrototype || method == Method::Diffusion) {
        const Matrix& m = cfg.rectify ? rectified : protos;
        if (method == Method::NearestPrototype) {
            out.predictions = nearest_prototype(query, m);
        } else {
            SparseWeights wq = build_weight_matrix(query, cfg.n_top, AdaptiveSigma{cfg.sigma_k});
            out.predictions = laplacian_label_propagation(query, m, wq, cfg.lambda).predictions;
        }
        out.accuracy = prediction_accuracy(out.predictions, episode.query_labels);
        return out;
    }

    const int n1 = static_cast<int>(support.rows()), n2 = static_cast<int>(query.rows());
    Matrix x(n1 + n2, support.cols());
    x << support, query;
    std::vector<int> labels(n1 + n2, kUnlabeled);
    for (int i = 0; i < n1; ++i) labels[i] = episode.support_labels[i];
    SparseWeights w = build_weight_matrix(x, cfg.n_top, AdaptiveSigma{cfg.sigma_k});

    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.sgd = cfg.sgd;
    tc.schedule = MultiStepSchedule::halves_and_quarters(cfg.epochs);
    tc.seed = seed;
    tc.train_idx = iota_indices(n1);
    tc.record_trace = false;
    if (method == Method::ExternalCD) tc.mu = cfg.mu;
    if (method == Method::InternalCD) {
        tc.diffusion = resolve_step(w, cfg.gamma, cfg.steps, cfg.policy);
        if (cfg.alpha != 0.0) {
            tc.alpha = cfg.alpha;
            for (int q = 0; q < n2; ++q) tc.proto_rows.push_back(n1 + q);
            tc.proto_features = query;
            tc.prototypes = rectified;
        }
    } else {
        tc.diffusion = {0.0, 0, true};
    }

    Architecture arch{static_cast<int>(x.cols()), episode.n_way, cfg.blocks, true, 0.0};
    Rng init_rng(seed);
    TrainResult tr = train(x, labels, w, init_params(arch, init_rng), tc);
    std::vector<int> all = argmax_rows(tr.logits);
    out.predictions.assign(all.begin() + n1, all.end());
    out.accuracy = prediction_accuracy(out.predictions, episode.query_labels);
    return out;
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    s.n = static_cast<int>(values.size());
    if (s.n == 0) return s;
    for (double v : values) s.mean += v;
    s.mean /= s.n;
    if (s.n > 1) {
        double var = 0.0;
        for (double v : values) var += (v - s.mean) * (v - s.mean);
        var /= (s.n - 1);
        s.ci95 = 1.96 * std::sqrt(var) / std::sqrt(double(s.n));
    }
    return s;
}

}  // namespace diffres
