#include <casimac/classifier.hpp>
#include <casimac/gpr.hpp>
#include <casimac/serialization.hpp>
#include <casimac/synth.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace casimac;

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Regressor returning a fixed density everywhere.
class StubRegressor final : public FittedRegressor {
public:
    StubRegressor(std::size_t in, PredictiveDensity d) : in_(in), d_(std::move(d)) {}
    std::string backend_name() const override { return "stub"; }
    std::size_t input_dimension() const override { return in_; }
    std::size_t output_dimension() const override { return static_cast<std::size_t>(d_.mean.size()); }
    PredictiveDensity predict_density(const Eigen::VectorXd&) const override { return d_; }
    nlohmann::json to_json() const override { return nlohmann::json::object(); }

private:
    std::size_t in_;
    PredictiveDensity d_;
};

CasimacModel stub_model(std::size_t n, PredictiveDensity d) {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < n; ++k) names.push_back("c" + std::to_string(k));
    return CasimacModel(build_simplex(n), gamma_config(1.0, 1, 1, "euclidean"),
                        std::make_shared<StubRegressor>(2, std::move(d)), names, {"a", "b"}, std::nullopt, 0);
}

GprConfig noise_free() {
    GprConfig cfg;
    cfg.noise_variance = {1e-10, 1e-10, 1e-10};
    return cfg;
}

LabeledData ternary_toy_set() {
    LabeledData d;
    d.class_names = {"red", "green", "blue"};
    d.feature_names = {"x1", "x2"};
    d.features.resize(9, 2);
    d.features << 0.2, 0.9, -0.1, 0.6, 0.4, 0.5, -0.8, -0.2, -0.5, -0.6, -0.9, 0.3, 0.7, -0.4, 0.3, -0.8, 0.9, 0.1;
    d.labels = {0, 0, 0, 1, 1, 1, 2, 2, 2};
    return d;
}

}  // namespace

TEST(BinaryProbability, ClosedFormValues) {
    EXPECT_DOUBLE_EQ(binary_positive_probability(0.0, 1.0), 0.5);
    EXPECT_NEAR(binary_positive_probability(1.0, 1.0), 0.841345, 1e-6);
    EXPECT_NEAR(binary_positive_probability(1.0, 1.0), phi(1.0), 1e-16);
    EXPECT_EQ(binary_positive_probability(-1.0, 0.0), 0.0);
}

TEST(BinaryProbability, MonteCarloAgreesInAggregate) {
    // Standardized residuals of the MC estimates should look like N(0, 1) draws.
    const SimplexGeometry g = build_simplex(2);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> mu(-2.0, 2.0), sd(0.3, 2.0);
    const std::size_t s = 100000;
    double sum_sq = 0.0;
    int cases = 0;
    for (int i = 0; i < 100; ++i) {
        PredictiveDensity d{Eigen::VectorXd::Constant(1, mu(rng)), Eigen::VectorXd::Constant(1, sd(rng))};
        const double p = binary_positive_probability(d.mean(0), d.std(0));
        const double mc = monte_carlo_segment_probabilities(d, g, McConfig{s, 17}, static_cast<std::uint64_t>(i))(0);
        const double se = std::sqrt(p * (1 - p) / static_cast<double>(s));
        EXPECT_LE(std::abs(mc - p), 5.0 * se);
        sum_sq += (mc - p) * (mc - p) / (se * se);
        ++cases;
    }
    // Chi-square with 100 degrees of freedom: 99.9% upper quantile is about 149.
    EXPECT_LE(sum_sq, 149.0);
}

TEST(SegmentProbabilities, BinaryUsesClosedFormRegardlessOfSamples) {
    const SimplexGeometry g = build_simplex(2);
    PredictiveDensity d{Eigen::VectorXd::Constant(1, 0.4), Eigen::VectorXd::Constant(1, 0.9)};
    const Eigen::VectorXd a = segment_probabilities(d, g, McConfig{100, 1}, 0);
    const Eigen::VectorXd b = segment_probabilities(d, g, McConfig{100000, 2}, 5);
    EXPECT_EQ(a, b);
    EXPECT_DOUBLE_EQ(a(0), phi(0.4 / 0.9));
    EXPECT_EQ(a.sum(), 1.0);
}

TEST(SegmentProbabilities, SymmetricDensityGivesUniformTernary) {
    const SimplexGeometry g = build_simplex(3);
    const std::size_t s = 100000;
    PredictiveDensity d{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(2, 1.3)};
    const Eigen::VectorXd p = segment_probabilities(d, g, McConfig{s, 3}, 0);
    for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(p(k), 1.0 / 3.0, 4.0 / std::sqrt(static_cast<double>(s)));
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
}

TEST(SegmentProbabilities, DeterministicPerPointSubstream) {
    const SimplexGeometry g = build_simplex(4);
    PredictiveDensity d{Eigen::Vector3d(0.2, -0.1, 0.4), Eigen::Vector3d(0.5, 0.8, 0.3)};
    const McConfig mc{5000, 99};
    EXPECT_EQ(segment_probabilities(d, g, mc, 3), segment_probabilities(d, g, mc, 3));
    EXPECT_NE(segment_probabilities(d, g, mc, 3), segment_probabilities(d, g, mc, 4));
    EXPECT_THROW(segment_probabilities(d, g, McConfig{99, 1}, 0), ConfigError);
}

TEST(SegmentProbabilities, PermutationEquivarianceWithCommonRandomNumbers) {
    // Q maps p_k to p_pi(k); an isotropic density centred at Q mu is the image of one centred at mu.
    const std::size_t n = 4;
    const SimplexGeometry g = build_simplex(n);
    const std::vector<ClassIndex> pi{3, 0, 2, 1};
    Eigen::MatrixXd target(n - 1, n);
    for (ClassIndex k = 0; k < n; ++k) target.col(static_cast<Eigen::Index>(k)) = g.vertex(pi[k]);
    const Eigen::MatrixXd q = target * g.vertices().completeOrthogonalDecomposition().pseudoInverse();
    const Eigen::Vector3d mu(0.3, -0.2, 0.5);
    std::mt19937_64 rng(42);
    std::normal_distribution<double> normal;
    std::vector<std::size_t> a(n, 0), b(n, 0);
    for (int i = 0; i < 20000; ++i) {
        Eigen::Vector3d e;
        for (Eigen::Index j = 0; j < 3; ++j) e(j) = normal(rng);
        const Eigen::VectorXd z = mu + 0.7 * e;
        ++a[nearest_vertex_label(z, g)];
        ++b[nearest_vertex_label(q * z, g)];
    }
    for (ClassIndex k = 0; k < n; ++k) EXPECT_EQ(a[k], b[pi[k]]);
}

TEST(CasimacModel, StubPassThroughAndOriginTieBreak) {
    PredictiveDensity d{Eigen::Vector2d::Zero(), Eigen::Vector2d(0.5, 0.5)};
    const CasimacModel m = stub_model(3, d);
    const Eigen::VectorXd x = Eigen::Vector2d(1.0, 2.0);
    EXPECT_EQ(m.predict_latent(x).mean, d.mean);
    EXPECT_EQ(m.predict_latent(x).std, d.std);
    EXPECT_EQ(m.predict(x), "c0");
    EXPECT_THROW(m.predict(Eigen::VectorXd::Zero(3)), DataError);
}

TEST(CasimacModel, RejectsInconsistentParts) {
    PredictiveDensity d{Eigen::Vector2d::Zero(), Eigen::Vector2d(0.5, 0.5)};
    EXPECT_THROW(CasimacModel(build_simplex(3), gamma_config(1.0, 1, 1, "euclidean"),
                              std::make_shared<StubRegressor>(2, d), {"a", "b"}, {"x", "y"}, std::nullopt, 0),
                 ConfigError);
    EXPECT_THROW(CasimacModel(build_simplex(4), gamma_config(1.0, 1, 1, "euclidean"),
                              std::make_shared<StubRegressor>(2, d), {"a", "b", "c", "d"}, {"x", "y"}, std::nullopt, 0),
                 ConfigError);
}

TEST(Fit, TernaryToySetIsReconstructedExactly) {
    const LabeledData toy = ternary_toy_set();
    const TransformConfig cfg = gamma_config(1.0, 1, 1, "euclidean");
    const CasimacModel m = fit(toy, cfg, GprBackend(noise_free()), 1);
    const LatentDataset latent =
        transform_dataset(m.preprocessing()->apply(toy.features), toy.labels, cfg, m.geometry());
    for (Eigen::Index i = 0; i < 9; ++i) {
        const Eigen::VectorXd x = toy.features.row(i).transpose();
        EXPECT_EQ(m.predict(x), toy.class_names[toy.labels[static_cast<std::size_t>(i)]]);
        EXPECT_LE((m.predict_latent_mean(x) - latent.latent.row(i).transpose()).cwiseAbs().maxCoeff(), 1e-5);
        EXPECT_GT(m.predict_latent(x).std.minCoeff(), 0.0);
        EXPECT_GT(segment_coefficients(latent.latent.row(i).transpose(), toy.labels[static_cast<std::size_t>(i)],
                                       m.geometry())
                      .minCoeff(),
                  0.0);
    }
}

TEST(Fit, StandardizationUsesTrainingStatisticsOnly) {
    const LabeledData train = synth_quadrants(40, 2);
    const CasimacModel m = fit(train, gamma_config(0.5, 1, 1, "euclidean"), GprBackend(), 2);
    ASSERT_TRUE(m.preprocessing().has_value());
    const Standardizer s = Standardizer::fit(train.features);
    EXPECT_EQ(m.preprocessing()->mean, s.mean);
    EXPECT_EQ(m.preprocessing()->scale, s.scale);
    const CasimacModel raw = fit(train, gamma_config(0.5, 1, 1, "euclidean"), GprBackend(), 2, FitOptions{false});
    EXPECT_FALSE(raw.preprocessing().has_value());
}

TEST(Fit, RefitWithSameSeedIsByteIdentical) {
    const LabeledData train = synth_quadrants(30, 4);
    const TransformConfig cfg = gamma_config(0.5, 1, 1, "taxicab");
    EXPECT_EQ(dump_model(fit(train, cfg, GprBackend(), 11)), dump_model(fit(train, cfg, GprBackend(), 11)));
}

TEST(Fit, ErrorsCarryTheirStage) {
    LabeledData bad = synth_quadrants(12, 1);
    try {
        fit(bad, TransformConfig{1.0, 0.0, 50, 1, "euclidean"}, GprBackend(), 0);
        FAIL() << "expected a constraint violation";
    } catch (const ConfigError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("transform:", 0), 0u);
    }
    bad.class_names.push_back("empty");
    EXPECT_THROW(fit(bad, gamma_config(1.0, 1, 1, "euclidean"), GprBackend(), 0), DataError);
}

TEST(Predict, AgreesWithArgmaxOfProbabilities) {
    const LabeledData train = synth_quadrants(40, 5);
    const LabeledData probe = synth_quadrants(40, 6);
    const CasimacModel m = fit(train, gamma_config(0.5, 1, 1, "euclidean"), GprBackend(), 5);
    const std::size_t s = 100000;
    for (Eigen::Index i = 0; i < probe.features.rows(); ++i) {
        const Eigen::VectorXd x = probe.features.row(i).transpose();
        const Eigen::VectorXd p = m.predict_proba(x, McConfig{s, 7}, static_cast<std::uint64_t>(i));
        EXPECT_NEAR(p.sum(), 1.0, 1e-12);
        EXPECT_GE(p.minCoeff(), 0.0);
        EXPECT_LE(p.maxCoeff(), 1.0);
        Eigen::Index best;
        p.maxCoeff(&best);
        Eigen::VectorXd sorted = p;
        std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<>());
        const double se = std::sqrt(sorted(0) * (1 - sorted(0)) / static_cast<double>(s));
        if (sorted(0) - sorted(1) >= 3.0 * se) {
            EXPECT_EQ(m.predict_index(x), static_cast<ClassIndex>(best));
        }
    }
}

TEST(Predict, BatchMatchesPointwiseAndIgnoresThreads) {
    const LabeledData train = synth_quadrants(24, 8);
    const LabeledData probe = synth_quadrants(20, 9);
    const CasimacModel m = fit(train, gamma_config(1.0, 1, 1, "euclidean"), GprBackend(), 8);
    const McConfig mc{2000, 3};
    const Eigen::MatrixXd serial = m.predict_proba(probe.features, mc, 1);
    const Eigen::MatrixXd threaded = m.predict_proba(probe.features, mc, 3);
    EXPECT_EQ(serial, threaded);
    for (Eigen::Index i = 0; i < probe.features.rows(); ++i) {
        EXPECT_EQ(Eigen::VectorXd(serial.row(i).transpose()),
                  m.predict_proba(probe.features.row(i).transpose(), mc, static_cast<std::uint64_t>(i)));
    }
}

TEST(Predict, BinaryLabelPermutationSwapsProbabilities) {
    // Points on a line; class names swapped between two otherwise identical fits.
    LabeledData a;
    a.feature_names = {"x"};
    a.class_names = {"neg", "pos"};
    a.features.resize(8, 1);
    a.features << -2.0, -1.5, -1.0, -0.4, 0.3, 0.9, 1.4, 2.2;
    a.labels = {0, 0, 0, 0, 1, 1, 1, 1};
    LabeledData b = a;
    b.class_names = {"pos", "neg"};
    for (auto& y : b.labels) y = 1 - y;
    const TransformConfig cfg = gamma_config(0.5, 1, 1, "euclidean");
    const CasimacModel ma = fit(a, cfg, GprBackend(), 3);
    const CasimacModel mb = fit(b, cfg, GprBackend(), 3);
    for (double x : {-1.7, -0.2, 0.0, 0.5, 3.0}) {
        const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, x);
        const Eigen::VectorXd pa = ma.predict_proba(q, McConfig{});
        const Eigen::VectorXd pb = mb.predict_proba(q, McConfig{});
        EXPECT_NEAR(pa(0), pb(1), 1e-12);
        EXPECT_NEAR(pa(1), pb(0), 1e-12);
    }
}
