#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "casimac/dataset.hpp"
#include "casimac/error.hpp"
#include "casimac/geometry.hpp"
#include "casimac/preprocess.hpp"
#include "casimac/random.hpp"
#include "casimac/regression.hpp"
#include "casimac/transform.hpp"

/**
 * @file classifier.hpp
 *
 * @brief The calibrated simplex-mapping classifier.
 *
 * Training maps every sample into its class's cone segment (transform.hpp) and fits a
 * probabilistic regressor on the result. A new point is labelled by the segment of the
 * regressor's mean prediction; class probabilities are the mass the predictive density
 * places on each segment.
 */

namespace casimac {

struct McConfig {
    std::size_t sample_count = 10000;
    std::uint64_t seed = 0;

    void validate() const {
        if (sample_count < 100) {
            throw ConfigError("Monte Carlo sample count must be at least 100");
        }
    }
};

/// P(Z >= 0) for Z ~ N(mean, std^2): the mass of segment 0 = [0, inf) when n = 2.
inline double binary_positive_probability(double mean, double std) {
    if (!(std > 0.0)) {
        return mean >= 0.0 ? 1.0 : 0.0;
    }
    return 0.5 * std::erfc(-mean / (std * std::numbers::sqrt2));
}

/**
 * Monte Carlo segment masses of a diagonal normal: @p mc.sample_count draws from the
 * substream (seed, point_index), each labelled by the nearest vertex (first maximum
 * score). The result depends only on the density, the seed and the point index.
 */
inline Eigen::VectorXd monte_carlo_segment_probabilities(const PredictiveDensity& density, const SimplexGeometry& g,
                                                         const McConfig& mc, std::uint64_t point_index) {
    const std::size_t n = g.class_count();
    Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    mc.validate();
    Rng rng = make_rng(mc.seed, {point_index});
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t dim = g.dimension();
    // Row-major copy of the vertices: scores[k] = sum_d vert[k * dim + d] * z[d].
    std::vector<double> vert(n * dim);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t d = 0; d < dim; ++d) {
            vert[k * dim + d] = g.vertex(k)(static_cast<Eigen::Index>(d));
        }
    }
    std::vector<std::size_t> counts(n, 0);
    std::vector<double> z(dim);
    for (std::size_t i = 0; i < mc.sample_count; ++i) {
        for (std::size_t d = 0; d < dim; ++d) {
            z[d] = density.mean(static_cast<Eigen::Index>(d)) + density.std(static_cast<Eigen::Index>(d)) * normal(rng);
        }
        std::size_t best = 0;
        double best_score = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                s += vert[k * dim + d] * z[d];
            }
            if (k == 0 || s > best_score) {
                best = k;
                best_score = s;
            }
        }
        ++counts[best];
    }
    for (std::size_t k = 0; k < n; ++k) {
        p(static_cast<Eigen::Index>(k)) = static_cast<double>(counts[k]) / static_cast<double>(mc.sample_count);
    }
    return p;
}

/// Segment masses: closed form for n = 2, Monte Carlo otherwise.
inline Eigen::VectorXd segment_probabilities(const PredictiveDensity& density, const SimplexGeometry& g,
                                             const McConfig& mc, std::uint64_t point_index) {
    if (g.class_count() == 2) {
        Eigen::VectorXd p(2);
        p(0) = binary_positive_probability(density.mean(0), density.std(0));
        p(1) = 1.0 - p(0);
        return p;
    }
    return monte_carlo_segment_probabilities(density, g, mc, point_index);
}

namespace detail {

/// Run body(i) for i in [0, count) on up to @p threads workers; results must not depend on scheduling.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += threads) {
                    body(i);
                }
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace detail

class CasimacModel {
public:
    CasimacModel(SimplexGeometry geometry, TransformConfig transform, std::shared_ptr<const FittedRegressor> regressor,
                 std::vector<std::string> class_names, std::vector<std::string> feature_names,
                 std::optional<Standardizer> preprocessing, std::uint64_t seed)
        : geometry_(std::move(geometry)),
          transform_(std::move(transform)),
          regressor_(std::move(regressor)),
          class_names_(std::move(class_names)),
          feature_names_(std::move(feature_names)),
          preprocessing_(std::move(preprocessing)),
          seed_(seed) {
        if (!regressor_) {
            throw ConfigError("model needs a fitted regressor");
        }
        if (class_names_.size() != geometry_.class_count()) {
            throw ConfigError("label map size differs from the geometry's class count");
        }
        if (regressor_->output_dimension() != geometry_.dimension()) {
            throw ConfigError("regressor output dimension differs from the latent dimension");
        }
    }

    const SimplexGeometry& geometry() const { return geometry_; }
    const TransformConfig& transform_config() const { return transform_; }
    const FittedRegressor& regressor() const { return *regressor_; }
    const std::vector<std::string>& class_names() const { return class_names_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::optional<Standardizer>& preprocessing() const { return preprocessing_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t class_count() const { return geometry_.class_count(); }
    std::size_t feature_count() const { return regressor_->input_dimension(); }

    /// Fit-time data-quality findings (not serialised).
    const std::vector<std::string>& warnings() const { return warnings_; }
    void set_warnings(std::vector<std::string> w) { warnings_ = std::move(w); }

    Eigen::VectorXd preprocess(const Eigen::VectorXd& x) const {
        if (static_cast<std::size_t>(x.size()) != feature_count()) {
            throw DataError("expected " + std::to_string(feature_count()) + " features, got " + std::to_string(x.size()));
        }
        return preprocessing_ ? preprocessing_->apply(x) : x;
    }

    PredictiveDensity predict_latent(const Eigen::VectorXd& x) const { return regressor_->predict_density(preprocess(x)); }

    LatentPoint predict_latent_mean(const Eigen::VectorXd& x) const { return regressor_->predict_mean(preprocess(x)); }

    ClassIndex predict_index(const Eigen::VectorXd& x) const {
        return nearest_vertex_label(predict_latent_mean(x), geometry_);
    }

    const std::string& predict(const Eigen::VectorXd& x) const { return class_names_[predict_index(x)]; }

    /// Probabilities indexed like class_names(); @p point_index selects the Monte Carlo substream.
    Eigen::VectorXd predict_proba(const Eigen::VectorXd& x, const McConfig& mc, std::uint64_t point_index = 0) const {
        return segment_probabilities(predict_latent(x), geometry_, mc, point_index);
    }

    std::vector<ClassIndex> predict_index(const FeatureMatrix& x) const {
        std::vector<ClassIndex> out(static_cast<std::size_t>(x.rows()));
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            out[static_cast<std::size_t>(i)] = predict_index(Eigen::VectorXd(x.row(i).transpose()));
        }
        return out;
    }

    /// Row i uses Monte Carlo substream i; @p threads only changes wall time.
    Eigen::MatrixXd predict_proba(const FeatureMatrix& x, const McConfig& mc, unsigned threads = 1) const {
        Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(class_count()));
        detail::parallel_for(static_cast<std::size_t>(x.rows()), threads, [&](std::size_t i) {
            const auto r = static_cast<Eigen::Index>(i);
            out.row(r) = predict_proba(Eigen::VectorXd(x.row(r).transpose()), mc, i).transpose();
        });
        return out;
    }

private:
    SimplexGeometry geometry_;
    TransformConfig transform_;
    std::shared_ptr<const FittedRegressor> regressor_;
    std::vector<std::string> class_names_;
    std::vector<std::string> feature_names_;
    std::optional<Standardizer> preprocessing_;
    std::uint64_t seed_;
    std::vector<std::string> warnings_;
};

struct FitOptions {
    bool standardize = true;
};

namespace detail {

template <class Fn>
auto with_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(stage) + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(std::string(stage) + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string(stage) + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(stage) + ": " + e.what());
    }
}

}  // namespace detail

/**
 * Train a classifier: optional standardisation (training statistics only), simplex
 * construction, latent transformation of the preprocessed features, and a backend fit
 * on (preprocessed x_i, f(x_i)).
 */
inline CasimacModel fit(const LabeledData& data, const TransformConfig& cfg, const RegressionBackend& backend,
                        std::uint64_t seed, const FitOptions& options = {}) {
    detail::with_stage("data", [&] { data.validate(); });
    std::optional<Standardizer> scaler;
    if (options.standardize) {
        scaler = detail::with_stage("preprocess", [&] { return Standardizer::fit(data.features); });
    }
    const FeatureMatrix x = scaler ? scaler->apply(data.features) : data.features;
    SimplexGeometry geometry = build_simplex(data.class_count());
    LatentDataset latent = detail::with_stage("transform", [&] { return transform_dataset(x, data.labels, cfg, geometry); });
    auto regressor = detail::with_stage("regression", [&] { return backend.fit(x, latent.latent, seed); });
    CasimacModel model(std::move(geometry), cfg, std::move(regressor), data.class_names, data.feature_names,
                       std::move(scaler), seed);
    model.set_warnings(std::move(latent.warnings));
    return model;
}

}  // namespace casimac
