// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero if any fails.
// Usage: casimac_acceptance [AC1 AC2 ...]   (no arguments runs everything)

#include <casimac/casimac.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace casimac;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

GprConfig pinned_noise_gpr() {
    GprConfig cfg;
    cfg.noise_variance = {1e-10, 1e-10, 1e-10};
    return cfg;
}

// Three angular sectors of the plane, three points each.
LabeledData ternary_toy_set() {
    LabeledData d;
    d.class_names = {"1", "2", "3"};
    d.feature_names = {"x1", "x2"};
    const double pts[9][2] = {{0.2, 0.9}, {-0.1, 0.6}, {0.4, 0.5},  {-0.8, -0.2}, {-0.5, -0.6},
                              {-0.9, 0.3}, {0.7, -0.4}, {0.3, -0.8}, {0.9, 0.1}};
    d.features.resize(9, 2);
    for (Eigen::Index i = 0; i < 9; ++i) {
        d.features(i, 0) = pts[i][0];
        d.features(i, 1) = pts[i][1];
        d.labels.push_back(static_cast<ClassIndex>(i / 3));
    }
    return d;
}

LabeledData random_labeled(std::uint64_t seed) {
    Rng rng = make_rng(seed, {0xa2u});
    std::uniform_int_distribution<std::size_t> nd(2, 5), md(1, 4), extra(0, 20);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = nd(rng);
    const std::size_t m = md(rng);
    const std::size_t count = 2 * n + extra(rng);
    std::uniform_int_distribution<std::size_t> label(0, n - 1);
    LabeledData d;
    for (std::size_t k = 0; k < n; ++k) d.class_names.push_back("c" + std::to_string(k));
    for (std::size_t j = 0; j < m; ++j) d.feature_names.push_back("f" + std::to_string(j));
    d.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < m; ++j) d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = u(rng);
        d.labels.push_back(i < 2 * n ? i % n : label(rng));
    }
    return d;
}

Outcome ac1_synthetic_benchmark() {
    constexpr int runs = 10;
    double acc = 0.0, pl = 0.0, ll = 0.0;
    for (int r = 1; r <= runs; ++r) {
        const auto seed = static_cast<std::uint64_t>(r);
        const LabeledData train = synth_quadrants(40, seed);
        const LabeledData test = synth_quadrants(10000, seed + 1000);
        CvOptions cv;
        cv.seed = seed;
        const TuningResult tuned = grid_search_cv(train, TuningGrid{}, cv);
        const CasimacModel model = fit(train, tuned.best.transform(), GprBackend(tuned.best_gpr), seed);
        const Eigen::MatrixXd probs = model.predict_proba(test.features, McConfig{10000, seed});
        const auto pred = model.predict_index(test.features);
        const double a = accuracy(test.labels, pred);
        const double p = proba_loss(test.labels, probs);
        const double l = log_loss(test.labels, probs);
        std::printf("      run %2d: gamma=%.2f nu=%.1f accuracy=%.4f proba-loss=%.4f log-loss=%.4f\n", r, tuned.best.gamma, tuned.best.nu, a, p, l);
        std::fflush(stdout);
        acc += a;
        pl += p;
        ll += l;
    }
    acc /= runs;
    pl /= runs;
    ll /= runs;
    Outcome o;
    o.pass = acc >= 0.88 && acc <= 0.95 && pl <= 0.20 && ll <= 0.9;
    o.detail = "mean accuracy " + fmt(acc) + " in [0.88,0.95], proba-loss " + fmt(pl) + " <= 0.20, log-loss " + fmt(ll) +
               " <= 0.9 (reference 0.913 / 0.106 / 0.406)";
    return o;
}

Outcome ac2_perfect_interpolation() {
    const GprBackend backend(pinned_noise_gpr());
    const TransformConfig cfg = gamma_config(1.0, 1, 1, "euclidean");
    int perfect = 0;
    const LabeledData toy = ternary_toy_set();
    const CasimacModel toy_model = fit(toy, cfg, backend, 7);
    const double toy_acc = accuracy(toy.labels, toy_model.predict_index(toy.features));
    perfect += toy_acc == 1.0;
    double worst = toy_acc;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const LabeledData d = random_labeled(s);
        const CasimacModel m = fit(d, cfg, backend, s);
        const double a = accuracy(d.labels, m.predict_index(d.features));
        perfect += a == 1.0;
        worst = std::min(worst, a);
    }
    return {perfect == 21, std::to_string(perfect) + "/21 datasets reconstructed exactly (toy set accuracy " +
                               fmt(toy_acc) + ", worst " + fmt(worst) + ")"};
}

Outcome ac3_cone_membership() {
    std::size_t total = 0, member = 0, minimum = 0;
    for (std::size_t n = 2; n <= 7; ++n) {
        const SimplexGeometry g = build_simplex(n);
        Rng rng = make_rng(3, {n});
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        for (int i = 0; i < 1000; ++i) {
            LatentPoint z(static_cast<Eigen::Index>(n - 1));
            for (Eigen::Index d = 0; d < z.size(); ++d) z(d) = u(rng);
            const ClassIndex label = nearest_vertex_label(z, g);
            std::set<ClassIndex> members;
            for (ClassIndex k = 0; k < n; ++k) {
                if (cone_membership_oracle(z, k, g)) members.insert(k);
            }
            ++total;
            member += members.count(label);
            minimum += !members.empty() && *members.begin() == label;
        }
    }
    return {member == total && minimum == total, "label in oracle set " + std::to_string(member) + "/" +
                                                     std::to_string(total) + ", equals its minimum " +
                                                     std::to_string(minimum) + "/" + std::to_string(total)};
}

Outcome ac4_binary_closed_form() {
    const auto start = std::chrono::steady_clock::now();
    const SimplexGeometry g = build_simplex(2);
    Rng rng = make_rng(4, {0u});
    std::uniform_real_distribution<double> mu(-3.0, 3.0), log_sigma(std::log(0.05), std::log(5.0));
    constexpr std::size_t samples = 100000;
    int within = 0;
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        PredictiveDensity d{Eigen::VectorXd::Constant(1, mu(rng)), Eigen::VectorXd::Constant(1, std::exp(log_sigma(rng)))};
        const double closed = binary_positive_probability(d.mean(0), d.std(0));
        const double oracle = normal_cdf(d.mean(0) / d.std(0));
        const double mc = monte_carlo_segment_probabilities(d, g, McConfig{samples, 4}, static_cast<std::uint64_t>(i))(0);
        const double bound = 3.0 * std::sqrt(closed * (1.0 - closed) / samples);
        const double err = std::abs(closed - mc);
        within += err <= bound && std::abs(closed - oracle) <= 1e-15;
        worst = std::max(worst, bound > 0.0 ? err / bound : (err > 0.0 ? INFINITY : 0.0));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {within == 200 && secs < 60.0, std::to_string(within) + "/200 within 3 standard errors (worst ratio " +
                                              fmt(worst) + "), " + fmt(secs) + " s"};
}

Outcome ac5_compression() {
    std::size_t total = 0, ok_round = 0, ok_label = 0, ok_interior = 0;
    double worst = 0.0;
    for (std::size_t n = 2; n <= 6; ++n) {
        const SimplexGeometry g = build_simplex(n);
        Rng rng = make_rng(5, {n});
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        for (int i = 0; i < 1000; ++i) {
            LatentPoint z(static_cast<Eigen::Index>(n - 1));
            for (Eigen::Index d = 0; d < z.size(); ++d) z(d) = u(rng);
            const LatentPoint w = compress(z, g);
            const Eigen::VectorXd b = barycentric(w, g);
            const double err = (decompress(w, g) - z).cwiseAbs().maxCoeff();
            worst = std::max(worst, err);
            ++total;
            ok_round += err <= 1e-9;
            ok_label += nearest_vertex_label(w, g) == nearest_vertex_label(z, g);
            ok_interior += (b.array() > 0.0).all() && (b.array() < 1.0).all();
        }
    }
    return {ok_round == total && ok_label == total && ok_interior == total,
            "round-trip " + std::to_string(ok_round) + "/" + std::to_string(total) + " (max error " + fmt(worst) +
                "), labels " + std::to_string(ok_label) + ", interior " + std::to_string(ok_interior)};
}

Outcome ac6_binary_special_case() {
    const SimplexGeometry g = build_simplex(2);
    const TransformConfig cfg = gamma_config(1.0, 1, 1, "euclidean");
    int exact = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng = make_rng(6, {s});
        std::uniform_int_distribution<int> size(4, 25), dim(1, 4);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        const auto count = static_cast<std::size_t>(size(rng));
        const auto m = dim(rng);
        FeatureMatrix x(static_cast<Eigen::Index>(count), m);
        std::vector<ClassIndex> labels(count);
        for (std::size_t i = 0; i < count; ++i) {
            for (int j = 0; j < m; ++j) x(static_cast<Eigen::Index>(i), j) = u(rng);
            labels[i] = i < 4 ? i % 2 : static_cast<ClassIndex>(rng() & 1u);
        }
        const LatentDataset latent = transform_dataset(x, labels, cfg, g);
        bool all = true;
        for (std::size_t i = 0; i < count; ++i) {
            double nearest = INFINITY;
            for (std::size_t j = 0; j < count; ++j) {
                if (labels[j] != labels[i]) {
                    double sq = 0.0;
                    for (int c = 0; c < m; ++c) {
                        const double diff = x(static_cast<Eigen::Index>(i), c) - x(static_cast<Eigen::Index>(j), c);
                        sq += diff * diff;
                    }
                    nearest = std::min(nearest, std::sqrt(sq));
                }
            }
            const double expected = labels[i] == 0 ? nearest : -nearest;
            all = all && latent.latent(static_cast<Eigen::Index>(i), 0) == expected;
        }
        exact += all;
    }
    return {exact == 50, std::to_string(exact) + "/50 datasets match the signed nearest-opposite distance exactly"};
}

Outcome ac7_gpr_numerics() {
    int grad_ok = 0, interp_ok = 0, dense_ok = 0;
    double worst_grad = 0.0, worst_interp = 0.0, worst_dense = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng = make_rng(7, {s});
        std::uniform_real_distribution<double> u(-1.0, 1.0), lu(-1.0, 1.0);
        const Eigen::Index count = 8 + static_cast<Eigen::Index>(s % 10);
        FeatureMatrix x(count, 2);
        Eigen::VectorXd y(count);
        for (Eigen::Index i = 0; i < count; ++i) {
            x(i, 0) = u(rng);
            x(i, 1) = u(rng);
            y(i) = std::sin(3.0 * x(i, 0)) + x(i, 1);
        }
        const double nu = std::array{0.5, 1.5, 2.5}[s % 3];
        const KernelParams p{std::exp(lu(rng)), std::exp(lu(rng)), 0.05 * std::exp(lu(rng))};
        const Eigen::MatrixXd dist = pairwise_euclidean(x);

        Eigen::VectorXd grad;
        log_marginal_likelihood(p, dist, y, nu, 1e-10, &grad);
        const double h = 1e-5;
        double rel = 0.0;
        for (Eigen::Index j = 0; j < 3; ++j) {
            Eigen::VectorXd tp = p.log(), tm = p.log();
            tp(j) += h;
            tm(j) -= h;
            const double fd = (log_marginal_likelihood(KernelParams::from_log(tp), dist, y, nu, 1e-10) -
                               log_marginal_likelihood(KernelParams::from_log(tm), dist, y, nu, 1e-10)) /
                              (2.0 * h);
            rel = std::max(rel, std::abs(grad(j) - fd) / std::max({std::abs(fd), std::abs(grad(j)), 1e-6}));
        }
        worst_grad = std::max(worst_grad, rel);
        grad_ok += rel <= 1e-4;

        const Eigen::MatrixXd k = kernel_matrix(dist, p, nu, 1e-10);
        const Eigen::FullPivLU<Eigen::MatrixXd> lu_k(k);
        const double dense = -0.5 * y.dot(k.inverse() * y) - 0.5 * std::log(lu_k.determinant()) -
                             0.5 * static_cast<double>(count) * std::log(2.0 * std::numbers::pi);
        const double chol = log_marginal_likelihood(p, dist, y, nu, 1e-10);
        worst_dense = std::max(worst_dense, std::abs(dense - chol));
        dense_ok += std::abs(dense - chol) <= 1e-8;

        Eigen::MatrixXd targets(count, 2);
        targets.col(0) = y;
        targets.col(1) = x.col(0).array() * x.col(1).array();
        const auto fitted = fit_gpr(x, targets, pinned_noise_gpr(), s);
        double res = 0.0;
        for (Eigen::Index i = 0; i < count; ++i) {
            res = std::max(res, (fitted->predict_mean(x.row(i).transpose()) - targets.row(i).transpose()).cwiseAbs().maxCoeff());
        }
        worst_interp = std::max(worst_interp, res);
        interp_ok += res <= 1e-5;
    }
    return {grad_ok == 20 && interp_ok == 20 && dense_ok == 20,
            "gradient " + std::to_string(grad_ok) + "/20 (worst rel " + fmt(worst_grad) + "), interpolation " +
                std::to_string(interp_ok) + "/20 (worst " + fmt(worst_interp) + "), dense oracle " +
                std::to_string(dense_ok) + "/20 (worst " + fmt(worst_dense) + ")"};
}

Outcome ac8_metrics() {
    std::vector<std::string> failed;
    auto check = [&](bool ok, const char* name) {
        if (!ok) failed.emplace_back(name);
    };
    {
        const std::vector<ClassIndex> t{0, 1};
        Eigen::MatrixXd p(2, 2);
        p << 0.8, 0.2, 0.6, 0.4;
        check(log_loss(t, p) == -(std::log(0.8) + std::log(0.4)) / 2.0, "log-loss");
        Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(2, 2, 0.5);
        check(log_loss(t, uniform) == std::log(2.0), "log-loss uniform");
    }
    {
        const std::vector<ClassIndex> t{0, 1, 2};
        Eigen::MatrixXd p(3, 3);
        p << 0.5, 0.3, 0.2, 0.05, 0.9, 0.05, 0.4, 0.4, 0.2;
        check(std::abs(proba_loss(t, p) - (1.0 - 1.6 / 3.0)) <= 1e-15, "proba-loss");
        check(top_k_accuracy(t, p, 1) == 2.0 / 3.0, "top-1");
        check(top_k_accuracy(t, p, 2) == 2.0 / 3.0, "top-2");
        check(top_k_accuracy(t, p, 3) == 1.0, "top-3");
    }
    {
        std::vector<ClassIndex> t, pr;
        auto add = [&](ClassIndex a, ClassIndex b, int c) {
            for (int i = 0; i < c; ++i) {
                t.push_back(a);
                pr.push_back(b);
            }
        };
        add(0, 0, 2);
        add(1, 0, 1);
        add(0, 1, 1);
        add(1, 1, 6);
        const auto s = weighted_prf(t, pr, 2);
        check(std::abs(s.precision - 0.8) <= 1e-15 && std::abs(s.recall - 0.8) <= 1e-15 && std::abs(s.f1 - 0.8) <= 1e-15,
              "weighted P/R/F1");
    }
    {
        const int table[3][3] = {{19, 0, 1}, {0, 8, 12}, {0, 5, 55}};
        std::vector<ClassIndex> t, pr;
        for (ClassIndex a = 0; a < 3; ++a)
            for (ClassIndex b = 0; b < 3; ++b)
                for (int i = 0; i < table[a][b]; ++i) {
                    t.push_back(a);
                    pr.push_back(b);
                }
        const ConfusionMatrix m = confusion_matrix(t, pr, 3);
        bool same = true;
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = 0; b < 3; ++b) same = same && m[a][b] == static_cast<std::size_t>(table[a][b]);
        check(same, "confusion layout");
        check(accuracy(t, pr) == 82.0 / 100.0, "confusion accuracy");
    }
    std::string detail = failed.empty() ? "all fixtures match" : "mismatched:";
    for (const auto& f : failed) detail += " " + f;
    return {failed.empty(), detail};
}

Outcome ac9_calibration() {
    Rng rng = make_rng(9, {0u});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(10000);
    std::vector<int> y(10000);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = u(rng);
        y[i] = u(rng) < p[i];
    }
    const double area = area_deviation(calibration_curve(y, p));
    auto curve = [](std::initializer_list<std::pair<double, double>> pts) {
        CalibrationCurve c;
        for (auto [x, f] : pts) c.bins.push_back({0.0, 0.0, x, f, 1});
        return c;
    };
    const double diag = area_deviation(curve({{0.05, 0.05}, {0.5, 0.5}, {0.95, 0.95}}));
    const double flat = area_deviation(curve({{0.0, 0.5}, {1.0, 0.5}}));
    const double shifted = area_deviation(curve({{0.0, 0.1}, {1.0, 1.1}}));
    const bool fixtures = diag == 0.0 && std::abs(flat - 0.25) <= 1e-15 && std::abs(shifted - 0.1) <= 1e-15;
    return {area <= 0.03 && fixtures, "calibrated predictor area " + fmt(area) + " <= 0.03; fixtures diagonal=" +
                                          fmt(diag) + " flat=" + fmt(flat) + " shifted=" + fmt(shifted)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::pair<const char*, std::function<Outcome()>>>> criteria{
        {"AC1", {"synthetic quadrant benchmark", ac1_synthetic_benchmark}},
        {"AC2", {"perfect-interpolation reconstruction", ac2_perfect_interpolation}},
        {"AC3", {"cone-membership equivalence", ac3_cone_membership}},
        {"AC4", {"binary closed form vs Monte Carlo", ac4_binary_closed_form}},
        {"AC5", {"compression map", ac5_compression}},
        {"AC6", {"binary special case of the transform", ac6_binary_special_case}},
        {"AC7", {"GPR numerics", ac7_gpr_numerics}},
        {"AC8", {"metric fixtures", ac8_metrics}},
        {"AC9", {"calibration machinery", ac9_calibration}},
    };
    const std::set<std::string> wanted(argv + 1, argv + argc);
    int failures = 0;
    for (const auto& [id, entry] : criteria) {
        if (!wanted.empty() && !wanted.count(id)) continue;
        Outcome o;
        try {
            o = entry.second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %s: %s -- %s\n", o.pass ? "PASS" : "FAIL", id.c_str(), entry.first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
