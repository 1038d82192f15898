#include "diffres/network.hpp"

#include <cmath>
#include <cstring>

namespace diffres {

Matrix Affine::apply(const Matrix& x) const {
    if (x.cols() != weight.cols()) throw Error("shape mismatch in affine map");
    Matrix y = x * weight.transpose();
    y.rowwise() += bias.transpose();
    return y;
}

namespace {

template <class F>
void for_each_map(const DiffResNetParams& p, F&& f) {
    for (size_t k = 0; k < p.blocks.size(); ++k) {
        f("blocks." + std::to_string(k) + ".fc1", p.blocks[k].fc1);
        if (p.arch.use_fc2) f("blocks." + std::to_string(k) + ".fc2", p.blocks[k].fc2);
    }
    f(std::string("classifier"), p.classifier);
}

Affine init_affine(int in, int out, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0 / std::sqrt(double(in)), 1.0 / std::sqrt(double(in)));
    Affine a{Matrix(out, in), Vector(out)};
    for (int i = 0; i < out; ++i)
        for (int j = 0; j < in; ++j) a.weight(i, j) = u(rng);
    for (int i = 0; i < out; ++i) a.bias(i) = u(rng);
    return a;
}

Affine zero_affine(const Affine& a) { return {Matrix::Zero(a.weight.rows(), a.weight.cols()), Vector::Zero(a.bias.size())}; }

}  // namespace

std::vector<std::pair<std::string, const Affine*>> DiffResNetParams::named_maps() const {
    std::vector<std::pair<std::string, const Affine*>> out;
    for_each_map(*this, [&](const std::string& name, const Affine& a) { out.emplace_back(name, &a); });
    return out;
}

long DiffResNetParams::parameter_count() const {
    long n = 0;
    for_each_map(*this, [&](const std::string&, const Affine& a) { n += a.weight.size() + a.bias.size(); });
    return n;
}

Vector DiffResNetParams::flatten() const {
    Vector v(parameter_count());
    long pos = 0;
    for_each_map(*this, [&](const std::string&, const Affine& a) {
        for (Eigen::Index i = 0; i < a.weight.rows(); ++i)
            for (Eigen::Index j = 0; j < a.weight.cols(); ++j) v(pos++) = a.weight(i, j);
        for (Eigen::Index i = 0; i < a.bias.size(); ++i) v(pos++) = a.bias(i);
    });
    return v;
}

void DiffResNetParams::assign(const Vector& flat) {
    if (flat.size() != parameter_count()) throw Error("flat parameter vector has wrong length");
    long pos = 0;
    for_each_map(*this, [&](const std::string&, const Affine& c) {
        Affine& a = const_cast<Affine&>(c);
        for (Eigen::Index i = 0; i < a.weight.rows(); ++i)
            for (Eigen::Index j = 0; j < a.weight.cols(); ++j) a.weight(i, j) = flat(pos++);
        for (Eigen::Index i = 0; i < a.bias.size(); ++i) a.bias(i) = flat(pos++);
    });
}

void DiffResNetParams::validate() const {
    const int d = arch.feature_dim;
    if (arch.blocks < 1 || static_cast<int>(blocks.size()) != arch.blocks) throw Error("block count mismatch");
    if (arch.dropout_rate < 0.0 || arch.dropout_rate >= 1.0) throw Error("dropout rate must be in [0, 1)");
    auto check = [](const Affine& a, int in, int out, const std::string& name) {
        if (a.weight.rows() != out || a.weight.cols() != in || a.bias.size() != out)
            throw Error("shape mismatch in " + name);
        if (!a.weight.allFinite() || !a.bias.allFinite()) throw Error("non-finite entries in " + name);
    };
    for (const auto& b : blocks) {
        check(b.fc1, d, d, "fc1");
        if (arch.use_fc2) check(b.fc2, d, d, "fc2");
    }
    check(classifier, d, arch.num_classes, "classifier");
}

DiffResNetParams init_params(const Architecture& arch, Rng& rng) {
    if (arch.feature_dim < 1 || arch.num_classes < 1 || arch.blocks < 1) throw Error("invalid architecture");
    DiffResNetParams p;
    p.arch = arch;
    for (int k = 0; k < arch.blocks; ++k) {
        ResidualBlockParams b;
        b.fc1 = init_affine(arch.feature_dim, arch.feature_dim, rng);
        if (arch.use_fc2) b.fc2 = init_affine(arch.feature_dim, arch.feature_dim, rng);
        p.blocks.push_back(std::move(b));
    }
    p.classifier = init_affine(arch.feature_dim, arch.num_classes, rng);
    p.validate();
    return p;
}

DiffResNetParams zeros_like(const DiffResNetParams& p) {
    DiffResNetParams z = p;
    for (auto& b : z.blocks) {
        b.fc1 = zero_affine(b.fc1);
        b.fc2 = zero_affine(b.fc2);
    }
    z.classifier = zero_affine(z.classifier);
    return z;
}

Matrix convection_forward(const Matrix& x, const ResidualBlockParams& block, bool use_fc2) {
    Matrix z = block.fc1.apply(x).cwiseMax(0.0);
    return use_fc2 ? Matrix(x + block.fc2.apply(z)) : Matrix(x + z);
}

std::uint64_t fingerprint(const DiffResNetParams& p) {
    Vector v = p.flatten();
    std::uint64_t h = 1469598103934665603ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
    for (size_t i = 0; i < static_cast<size_t>(v.size()) * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

ForwardResult forward(const Matrix& x, const DiffResNetParams& params, const SparseWeights& w,
                      const DiffusionConfig& diff, Rng* rng, bool train_mode) {
    if (x.cols() != params.arch.feature_dim) throw Error("input dimension does not match the network");
    if (diff.steps > 0 && x.rows() != w.size()) throw Error("weight matrix size does not match the input");
    check_stable(w, diff);
    const double p = params.arch.dropout_rate;
    const bool drop = train_mode && p > 0.0;
    if (drop && rng == nullptr) throw Error("dropout in train mode needs an rng");

    ForwardResult res;
    ForwardCache& cache = res.cache;
    cache.diffusion = diff;
    cache.weights = &w;
    cache.params_fingerprint = fingerprint(params);

    Matrix h = x;
    std::bernoulli_distribution keep(1.0 - p);
    for (const auto& block : params.blocks) {
        BlockCache bc;
        bc.input = h;
        bc.pre_activation = block.fc1.apply(h);
        Matrix z = bc.pre_activation.cwiseMax(0.0);
        h = params.arch.use_fc2 ? Matrix(h + block.fc2.apply(z)) : Matrix(h + z);
        for (int s = 0; s < diff.steps; ++s) {
            h = diffusion_step(h, w, diff.gamma);
            if (drop) {
                Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask(h.rows(), h.cols());
                for (Eigen::Index j = 0; j < h.cols(); ++j)
                    for (Eigen::Index i = 0; i < h.rows(); ++i) mask(i, j) = keep(*rng);
                h = (mask.cast<double>() * h.array() / (1.0 - p)).matrix();
                bc.dropout_masks.push_back(std::move(mask));
            }
        }
        cache.blocks.push_back(std::move(bc));
    }
    cache.features = h;
    res.logits = params.classifier.apply(h);
    return res;
}

Gradients backward(const DiffResNetParams& params, const ForwardCache& cache, const Matrix& grad_logits) {
    if (cache.params_fingerprint != fingerprint(params))
        throw Error("stale cache: parameters changed since the forward pass");
    if (grad_logits.rows() != cache.features.rows() || grad_logits.cols() != params.arch.num_classes)
        throw Error("gradient shape does not match the logits");
    const double p = params.arch.dropout_rate;

    Gradients g{zeros_like(params), Matrix()};
    g.params.classifier.weight = grad_logits.transpose() * cache.features;
    g.params.classifier.bias = grad_logits.colwise().sum().transpose();
    Matrix dh = grad_logits * params.classifier.weight;

    for (int k = static_cast<int>(params.blocks.size()) - 1; k >= 0; --k) {
        const BlockCache& bc = cache.blocks[k];
        const ResidualBlockParams& block = params.blocks[k];
        ResidualBlockParams& gb = g.params.blocks[k];
        for (int s = cache.diffusion.steps - 1; s >= 0; --s) {
            if (!bc.dropout_masks.empty()) dh = (bc.dropout_masks[s].cast<double>() * dh.array() / (1.0 - p)).matrix();
            dh = diffusion_backward(dh, *cache.weights, cache.diffusion.gamma);
        }
        Matrix dz;
        Matrix z = bc.pre_activation.cwiseMax(0.0);
        if (params.arch.use_fc2) {
            gb.fc2.weight = dh.transpose() * z;
            gb.fc2.bias = dh.colwise().sum().transpose();
            dz = dh * block.fc2.weight;
        } else {
            dz = dh;
        }
        Matrix da = (bc.pre_activation.array() > 0.0).select(dz, 0.0);
        gb.fc1.weight = da.transpose() * bc.input;
        gb.fc1.bias = da.colwise().sum().transpose();
        dh = dh + da * block.fc1.weight;
    }
    g.input = dh;
    return g;
}

}  // namespace diffres
