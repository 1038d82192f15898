#include "diffres/verify.hpp"

#include "diffres/datasets.hpp"
#include "diffres/diffusion.hpp"
#include "diffres/experiments.hpp"
#include "diffres/theory.hpp"

#include <algorithm>
#include <cmath>

namespace diffres {

nlohmann::json ClaimReport::to_json() const {
    return {{"claim", claim}, {"status", passed ? "pass" : "fail"}, {"measured", measured},
            {"tolerances", tolerances}, {"details", details}};
}

std::vector<std::string> claim_names() { return {"stability", "oracle", "theorem1", "theorem2", "prop1"}; }

ClaimReport run_claim(const std::string& name, std::uint64_t seed) {
    if (name == "stability") return verify_stability_claim(seed);
    if (name == "oracle") return verify_oracle_claim(seed);
    if (name == "theorem1") return verify_flow_claim(seed);
    if (name == "theorem2") return verify_separability_claim(seed);
    if (name == "prop1") return verify_collapse_claim(seed);
    throw Error("unknown claim '" + name + "'");
}

double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y, double* slope) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    double b = sxy / sxx;
    if (slope) *slope = b;
    if (syy == 0.0) return 1.0;
    return (sxy * sxy) / (sxx * syy);
}

namespace {

SparseWeights random_graph(Rng& rng, int n_min, int n_max, Matrix* points = nullptr) {
    std::uniform_int_distribution<int> n_dist(n_min, n_max), k_dist(3, 10);
    std::uniform_real_distribution<double> u(0.0, 1.0), s_dist(0.2, 1.0);
    const int n = n_dist(rng);
    Matrix x(n, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    if (points) *points = x;
    return build_weight_matrix(x, std::min(k_dist(rng), n - 1), FixedSigma{s_dist(rng)});
}

}  // namespace

ClaimReport verify_stability_claim(std::uint64_t seed, int graphs) {
    ClaimReport r;
    r.claim = "stability";
    Rng rng(seed);
    double worst = 0.0;
    for (int g = 0; g < graphs; ++g) {
        SparseWeights w = random_graph(rng, 20, 200);
        StabilityReport s = verify_stability(w, stability_max_step(w));
        worst = std::max(worst, std::abs(s.rho - 1.0));
    }
    r.passed = worst <= 1e-9;
    r.measured = {{"graphs", graphs}, {"max_abs_rho_minus_1", worst}};
    r.tolerances = {{"rho_minus_1", 1e-9}};
    return r;
}

ClaimReport verify_oracle_claim(std::uint64_t seed, int graphs) {
    ClaimReport r;
    r.claim = "oracle";
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst_err = 0.0, min_ratio = 1e300, max_ratio = 0.0;
    for (int k = 0; k < graphs; ++k) {
        SparseWeights w = random_graph(rng, 5, 50);
        const double gamma = stability_max_step(w), t = 1.0;
        Matrix x0(w.size(), 2);
        for (Eigen::Index i = 0; i < x0.size(); ++i) x0.data()[i] = g(rng);
        Matrix exact = diffusion_closed_form(x0, graph_laplacian(w), gamma, t);
        auto euler_err = [&](int steps) {
            Matrix x = x0;
            for (int s = 0; s < steps; ++s) x = diffusion_step(x, w, gamma * t / steps);
            return (x - exact).norm() / exact.norm();
        };
        double e1 = euler_err(1000), e2 = euler_err(2000);
        worst_err = std::max(worst_err, e1);
        min_ratio = std::min(min_ratio, e1 / e2);
        max_ratio = std::max(max_ratio, e1 / e2);
    }
    r.passed = worst_err <= 1e-3 && min_ratio >= 1.8 && max_ratio <= 2.2;
    r.measured = {{"graphs", graphs}, {"max_rel_error_r1000", worst_err}, {"min_ratio", min_ratio}, {"max_ratio", max_ratio}};
    r.tolerances = {{"rel_error", 1e-3}, {"ratio", "2.0 +- 0.2"}};
    return r;
}

ClaimReport verify_flow_claim(std::uint64_t seed, int instances) {
    ClaimReport r;
    r.claim = "theorem1";
    Rng rng(seed);
    std::uniform_int_distribution<int> n_dist(1, 12), lab(0, 1), width(1, 3);
    std::normal_distribution<double> g(0.0, 1.0);
    int separable = 0;
    double worst_target = 0.0, worst_invariant = 0.0;
    for (int k = 0; k < instances; ++k) {
        const int n = n_dist(rng);
        Matrix x(n, 3);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
        std::vector<int> y(n);
        for (int& v : y) v = lab(rng);
        FlowSchedule s = construct_separating_flow(x, y, 0.0, 1.0, rng, k % 2 == 0 ? 1 : width(rng));
        Matrix out = apply_flow(x, s);
        separable += linear_separability(out, y).separable;
        for (int i = 0; i < n; ++i) {
            worst_target = std::max(worst_target, std::abs(out(i, 0) - (y[i] == 0 ? 0.0 : 1.0)));
            double a0 = x.row(i).dot(s.w_star), a1 = out.row(i).dot(s.w_star);
            worst_invariant = std::max(worst_invariant, std::abs(a1 - a0) / std::max(1.0, std::abs(a0)));
        }
    }
    r.passed = separable == instances && worst_target <= 1e-8 && worst_invariant <= 1e-12;
    r.measured = {{"instances", instances}, {"separable", separable}, {"max_target_error", worst_target},
                  {"max_projection_drift", worst_invariant}};
    r.tolerances = {{"target", 1e-8}, {"projection", 1e-12}};
    return r;
}

ClaimReport verify_separability_claim(std::uint64_t seed, int datasets) {
    ClaimReport r;
    r.claim = "theorem2";
    Rng rng(seed);
    int witnesses = 0;
    double min_margin = 1e300;
    for (int k = 0; k < datasets; ++k) {
        const int l = 1 + k % 3, m = 2 * l;
        const double target = 2.0 * separability_threshold(m, 2);
        StructuredDataset ds = gen_structured_clusters(2, l, 2, 20, 1.0, target, rng);
        StructuredStats st = structured_stats(ds);
        min_margin = std::min(min_margin, (st.L / st.D) / separability_threshold(m, 2));
        witnesses += check_parallel_separable(ds, 0, rng).has_value();
    }
    r.passed = witnesses == datasets && min_margin >= 2.0;
    r.measured = {{"datasets", datasets}, {"witnesses", witnesses}, {"min_ratio_over_threshold", min_margin}};
    r.tolerances = {{"ratio_over_threshold", 2.0}};
    return r;
}

ClaimReport verify_collapse_claim(std::uint64_t seed) {
    ClaimReport r;
    r.claim = "prop1";
    // The claim assumes one graph component per cluster. Boundary points of neighbouring disks
    // sometimes pick each other as top-k neighbours, so draws are repeated until the hypothesis holds.
    PointSet pts;
    SparseWeights w;
    bool aligned = false;
    int redraws = 0;
    for (; redraws < 20 && !aligned; ++redraws) {
        Rng rng(redraws == 0 ? seed : derive_seed(seed, 500 + redraws));
        pts = gen_xor(rng);
        w = build_weight_matrix(pts.coords, 20, FixedSigma{0.5});
        std::vector<int> comp = connected_components(w);
        aligned = component_count(comp) == 4;
        for (int i = 0; i < pts.size() && aligned; ++i) aligned = comp[i] == comp[(i / 100) * 100];
    }
    StructuredDataset ds = xor_structure(pts);
    DiffusionConfig cfg = resolve_step(w, 1.0, 200, StepPolicy::Clamp);
    RatioTrace tr = ratio_trace(ds, w, cfg.gamma, cfg.steps);

    double worst_shrink = 0.0, worst_drop = 0.0;
    for (size_t m = 0; m < tr.diameters[0].size(); ++m)
        worst_shrink = std::max(worst_shrink, tr.diameters.back()[m] / tr.diameters[0][m]);
    for (double l : tr.L) worst_drop = std::max(worst_drop, tr.L[0] - l);
    std::vector<double> t, logd;
    for (size_t k = 0; k < tr.D.size(); ++k)
        if (tr.D[k] >= 1e-10 * tr.D[0]) {
            t.push_back(tr.step[k]);
            logd.push_back(std::log(tr.D[k]));
        }
    double slope = 0.0;
    double r2 = linear_fit_r2(t, logd, &slope);
    r.passed = aligned && worst_shrink <= 0.01 && worst_drop <= 1e-9 && r2 >= 0.99;
    r.measured = {{"components_match_clusters", aligned}, {"draws", redraws}, {"gamma", cfg.gamma}, {"steps", cfg.steps},
                  {"max_diameter_ratio", worst_shrink}, {"max_L_drop", worst_drop}, {"log_D_r2", r2},
                  {"log_D_slope", slope}, {"D0", tr.D.front()}, {"L0", tr.L.front()}};
    r.tolerances = {{"diameter_ratio", 0.01}, {"L_drop", 1e-9}, {"r2", 0.99}};
    return r;
}

}  // namespace diffres
