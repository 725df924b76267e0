#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "casimac/error.hpp"
#include "casimac/optimize.hpp"
#include "casimac/random.hpp"
#include "casimac/regression.hpp"

/**
 * @file gpr.hpp
 *
 * @brief Gaussian process regression with a Matern plus white-noise kernel.
 *
 * One independent zero-mean GP per latent dimension, each with its own
 * (length scale, signal variance, noise variance) chosen by maximising the log
 * marginal likelihood in log-parameter space.
 */

namespace casimac {

/// Half-integer smoothness values with closed forms.
inline void check_nu(double nu) {
    if (nu != 0.5 && nu != 1.5 && nu != 2.5) {
        throw ConfigError("unsupported Matern nu " + std::to_string(nu) + " (expected 0.5, 1.5 or 2.5)");
    }
}

/// Unit-variance Matern correlation at scaled lag u = r / l.
inline double matern_correlation(double u, double nu) {
    if (nu == 0.5) {
        return std::exp(-u);
    }
    if (nu == 1.5) {
        const double a = std::sqrt(3.0) * u;
        return (1.0 + a) * std::exp(-a);
    }
    if (nu == 2.5) {
        const double a = std::sqrt(5.0) * u;
        return (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
    check_nu(nu);
    return 0.0;
}

/// Derivative of matern_correlation(r / l) with respect to log l.
inline double matern_dlog_length(double u, double nu) {
    if (nu == 0.5) {
        return u * std::exp(-u);
    }
    if (nu == 1.5) {
        const double a = std::sqrt(3.0) * u;
        return a * a * std::exp(-a);
    }
    if (nu == 2.5) {
        const double a = std::sqrt(5.0) * u;
        return a * a * (1.0 + a) / 3.0 * std::exp(-a);
    }
    check_nu(nu);
    return 0.0;
}

inline double matern_kernel(double r, double nu, double length_scale, double signal_variance) {
    if (r < 0.0 || !(length_scale > 0.0) || !(signal_variance > 0.0)) {
        throw ConfigError("matern_kernel requires r >= 0 and positive parameters");
    }
    check_nu(nu);
    return signal_variance * matern_correlation(r / length_scale, nu);
}

struct ParameterBounds {
    double initial;
    double lower;
    double upper;
};

struct GprConfig {
    double nu = 2.5;
    ParameterBounds length_scale{1.0, 1e-2, 1e3};
    ParameterBounds signal_variance{1.0, 1e-3, 1e3};
    ParameterBounds noise_variance{1e-2, 1e-10, 1e1};
    /// Additional seeded log-uniform starting points besides the initial values.
    int restarts = 4;
    double jitter = 1e-10;
    BoxOptimizerOptions optimizer{};

    void validate() const {
        check_nu(nu);
        for (const auto* b : {&length_scale, &signal_variance, &noise_variance}) {
            if (!(b->lower > 0.0) || !(b->lower <= b->initial) || !(b->initial <= b->upper)) {
                throw ConfigError("GPR bounds must be positive intervals containing the initial value");
            }
        }
        if (restarts < 0) {
            throw ConfigError("GPR restarts must be non-negative");
        }
        if (!(jitter > 0.0)) {
            throw ConfigError("GPR jitter must be positive");
        }
    }
};

struct KernelParams {
    double length_scale = 1.0;
    double signal_variance = 1.0;
    double noise_variance = 1e-2;

    Eigen::Vector3d log() const { return {std::log(length_scale), std::log(signal_variance), std::log(noise_variance)}; }

    static KernelParams from_log(const Eigen::VectorXd& t) { return {std::exp(t(0)), std::exp(t(1)), std::exp(t(2))}; }
};

inline Eigen::MatrixXd pairwise_euclidean(const FeatureMatrix& x) {
    const Eigen::Index d = x.rows();
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) {
            r(i, j) = r(j, i) = (x.row(i) - x.row(j)).norm();
        }
    }
    return r;
}

/// K = signal * M(R / l) + (noise + jitter) I.
inline Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& dist, const KernelParams& p, double nu, double jitter) {
    Eigen::MatrixXd k = dist.unaryExpr([&](double r) { return p.signal_variance * matern_correlation(r / p.length_scale, nu); });
    k.diagonal().array() += p.noise_variance + jitter;
    return k;
}

/**
 * Log marginal likelihood of one output column and its gradient with respect to
 * (log l, log signal, log noise). Returns -inf when the kernel matrix is not
 * positive definite.
 */
inline double log_marginal_likelihood(const KernelParams& p, const Eigen::MatrixXd& dist, const Eigen::VectorXd& y,
                                      double nu, double jitter, Eigen::VectorXd* gradient = nullptr) {
    const Eigen::Index d = dist.rows();
    const Eigen::MatrixXd k = kernel_matrix(dist, p, nu, jitter);
    const Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) {
        return -std::numeric_limits<double>::infinity();
    }
    const Eigen::VectorXd alpha = llt.solve(y);
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double value = -0.5 * y.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
    if (!std::isfinite(value)) {
        return -std::numeric_limits<double>::infinity();
    }
    if (gradient != nullptr) {
        const Eigen::MatrixXd inner = alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(d, d));
        const Eigen::MatrixXd dl = dist.unaryExpr([&](double r) { return p.signal_variance * matern_dlog_length(r / p.length_scale, nu); });
        const Eigen::MatrixXd ds = dist.unaryExpr([&](double r) { return p.signal_variance * matern_correlation(r / p.length_scale, nu); });
        gradient->resize(3);
        (*gradient)(0) = 0.5 * inner.cwiseProduct(dl).sum();
        (*gradient)(1) = 0.5 * inner.cwiseProduct(ds).sum();
        (*gradient)(2) = 0.5 * p.noise_variance * inner.trace();
    }
    return value;
}

/// Starting point and outcome of one optimiser run.
struct RestartTrace {
    KernelParams start;
    double start_value = 0.0;
    KernelParams optimum;
    double optimum_value = 0.0;
};

/**
 * Optimise the hyperparameters of one output column. Restart r > 0 draws its start
 * log-uniformly from the bounds using the substream (seed, column, r).
 */
inline KernelParams optimize_hyperparameters(const Eigen::MatrixXd& dist, const Eigen::VectorXd& y, const GprConfig& cfg,
                                             std::uint64_t seed, std::size_t column,
                                             std::vector<RestartTrace>* trace = nullptr) {
    const Eigen::Vector3d lo{std::log(cfg.length_scale.lower), std::log(cfg.signal_variance.lower),
                             std::log(cfg.noise_variance.lower)};
    const Eigen::Vector3d hi{std::log(cfg.length_scale.upper), std::log(cfg.signal_variance.upper),
                             std::log(cfg.noise_variance.upper)};
    const Objective objective = [&](const Eigen::VectorXd& t, Eigen::VectorXd& g) {
        Eigen::VectorXd grad;
        const double v = log_marginal_likelihood(KernelParams::from_log(t), dist, y, cfg.nu, cfg.jitter, &grad);
        if (!std::isfinite(v)) {
            g.setZero(3);
            return std::numeric_limits<double>::infinity();
        }
        g = -grad;
        return -v;
    };

    KernelParams best{cfg.length_scale.initial, cfg.signal_variance.initial, cfg.noise_variance.initial};
    double best_value = -std::numeric_limits<double>::infinity();
    for (int r = 0; r <= cfg.restarts; ++r) {
        Eigen::VectorXd start(3);
        if (r == 0) {
            start = KernelParams{cfg.length_scale.initial, cfg.signal_variance.initial, cfg.noise_variance.initial}.log();
        } else {
            Rng rng = make_rng(seed, {column, static_cast<std::uint64_t>(r)});
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (Eigen::Index i = 0; i < 3; ++i) {
                start(i) = lo(i) + unit(rng) * (hi(i) - lo(i));
            }
        }
        Eigen::VectorXd g0;
        const double start_value = -objective(start, g0);
        const BoxOptimizerResult res = minimize_box(objective, start, lo, hi, cfg.optimizer);
        const double value = -res.value;
        if (trace != nullptr) {
            trace->push_back({KernelParams::from_log(start), start_value, KernelParams::from_log(res.x), value});
        }
        if (std::isfinite(value) && value > best_value) {
            best_value = value;
            best = KernelParams::from_log(res.x);
        }
    }
    if (!std::isfinite(best_value)) {
        throw NumericalError("log marginal likelihood is not finite at any restart");
    }
    return best;
}

/**
 * Trained GP: training data, per-column hyperparameters, Cholesky factors and weights.
 *
 * Construction from (inputs, targets, hyperparameters) is deterministic, so a model
 * restored from its JSON document predicts bit-identically.
 */
class FittedGpr final : public FittedRegressor {
public:
    FittedGpr(FeatureMatrix inputs, Eigen::MatrixXd targets, std::vector<KernelParams> params, double nu, double jitter)
        : inputs_(std::move(inputs)), targets_(std::move(targets)), params_(std::move(params)), nu_(nu), jitter_(jitter) {
        check_nu(nu_);
        if (inputs_.rows() == 0 || inputs_.rows() != targets_.rows()) {
            throw DataError("GPR needs a non-empty training set with one target row per input");
        }
        if (static_cast<Eigen::Index>(params_.size()) != targets_.cols()) {
            throw ConfigError("one kernel parameter set per output dimension is required");
        }
        const Eigen::MatrixXd dist = pairwise_euclidean(inputs_);
        for (std::size_t c = 0; c < params_.size(); ++c) {
            factors_.push_back(factorize(dist, params_[c]));
            weights_.push_back(factors_.back().solve(targets_.col(static_cast<Eigen::Index>(c))));
        }
    }

    std::string backend_name() const override { return "gpr"; }
    std::size_t input_dimension() const override { return static_cast<std::size_t>(inputs_.cols()); }
    std::size_t output_dimension() const override { return static_cast<std::size_t>(targets_.cols()); }

    const std::vector<KernelParams>& kernel_params() const { return params_; }
    double nu() const { return nu_; }
    const FeatureMatrix& inputs() const { return inputs_; }
    const Eigen::MatrixXd& targets() const { return targets_; }

    PredictiveDensity predict_density(const Eigen::VectorXd& x) const override {
        if (x.size() != inputs_.cols()) {
            throw DataError("GPR input has dimension " + std::to_string(x.size()) + ", expected " +
                            std::to_string(inputs_.cols()));
        }
        const Eigen::Index d = inputs_.rows();
        Eigen::VectorXd dist(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            dist(i) = (inputs_.row(i).transpose() - x).norm();
        }
        PredictiveDensity out{Eigen::VectorXd(targets_.cols()), Eigen::VectorXd(targets_.cols())};
        for (std::size_t c = 0; c < params_.size(); ++c) {
            const auto& p = params_[c];
            const Eigen::VectorXd ks =
                dist.unaryExpr([&](double r) { return p.signal_variance * matern_correlation(r / p.length_scale, nu_); });
            const auto ci = static_cast<Eigen::Index>(c);
            out.mean(ci) = ks.dot(weights_[c]);
            const Eigen::VectorXd v = factors_[c].matrixL().solve(ks);
            const double var = p.signal_variance + p.noise_variance - v.squaredNorm();
            out.std(ci) = std::sqrt(std::max(var, 1e-12));
        }
        return out;
    }

    Eigen::VectorXd predict_mean(const Eigen::VectorXd& x) const override { return predict_density(x).mean; }

    nlohmann::json to_json() const override {
        nlohmann::json doc;
        doc["nu"] = nu_;
        doc["jitter"] = jitter_;
        auto& hp = doc["kernel_params"] = nlohmann::json::array();
        for (const auto& p : params_) {
            hp.push_back({{"length_scale", p.length_scale},
                          {"signal_variance", p.signal_variance},
                          {"noise_variance", p.noise_variance}});
        }
        auto& xs = doc["inputs"] = nlohmann::json::array();
        for (Eigen::Index i = 0; i < inputs_.rows(); ++i) {
            xs.push_back(std::vector<double>(inputs_.row(i).begin(), inputs_.row(i).end()));
        }
        auto& ys = doc["targets"] = nlohmann::json::array();
        for (Eigen::Index i = 0; i < targets_.rows(); ++i) {
            ys.push_back(std::vector<double>(targets_.row(i).begin(), targets_.row(i).end()));
        }
        return doc;
    }

    static std::shared_ptr<const FittedGpr> from_json(const nlohmann::json& doc) {
        try {
            const auto xs = doc.at("inputs").get<std::vector<std::vector<double>>>();
            const auto ys = doc.at("targets").get<std::vector<std::vector<double>>>();
            if (xs.empty() || xs.size() != ys.size()) {
                throw FormatError("GPR document has mismatched inputs/targets");
            }
            FeatureMatrix x(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(xs[0].size()));
            Eigen::MatrixXd y(static_cast<Eigen::Index>(ys.size()), static_cast<Eigen::Index>(ys[0].size()));
            for (std::size_t i = 0; i < xs.size(); ++i) {
                if (xs[i].size() != xs[0].size() || ys[i].size() != ys[0].size()) {
                    throw FormatError("GPR document rows are ragged");
                }
                for (std::size_t j = 0; j < xs[i].size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = xs[i][j];
                for (std::size_t j = 0; j < ys[i].size(); ++j) y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ys[i][j];
            }
            std::vector<KernelParams> params;
            for (const auto& p : doc.at("kernel_params")) {
                params.push_back({p.at("length_scale").get<double>(), p.at("signal_variance").get<double>(),
                                  p.at("noise_variance").get<double>()});
            }
            return std::make_shared<const FittedGpr>(std::move(x), std::move(y), std::move(params),
                                                     doc.at("nu").get<double>(), doc.at("jitter").get<double>());
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("malformed GPR document: ") + e.what());
        }
    }

private:
    /// Cholesky with up to three tenfold jitter escalations.
    Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& dist, const KernelParams& p) const {
        double jitter = jitter_;
        for (int attempt = 0; attempt <= 3; ++attempt, jitter *= 10.0) {
            Eigen::LLT<Eigen::MatrixXd> llt(kernel_matrix(dist, p, nu_, jitter));
            if (llt.info() == Eigen::Success) {
                return llt;
            }
        }
        throw NumericalError("kernel matrix is not positive definite after jitter escalation");
    }

    FeatureMatrix inputs_;
    Eigen::MatrixXd targets_;
    std::vector<KernelParams> params_;
    double nu_;
    double jitter_;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> factors_;
    std::vector<Eigen::VectorXd> weights_;
};

/// Fit one GP per target column. @p trace, when given, receives one entry list per column.
inline std::shared_ptr<const FittedGpr> fit_gpr(const FeatureMatrix& inputs, const Eigen::MatrixXd& targets,
                                                const GprConfig& cfg, std::uint64_t seed,
                                                std::vector<std::vector<RestartTrace>>* trace = nullptr) {
    cfg.validate();
    if (inputs.rows() < 1 || inputs.rows() != targets.rows()) {
        throw DataError("GPR needs at least one training point and one target row per input");
    }
    const Eigen::MatrixXd dist = pairwise_euclidean(inputs);
    std::vector<KernelParams> params;
    if (trace != nullptr) {
        trace->assign(static_cast<std::size_t>(targets.cols()), {});
    }
    for (Eigen::Index c = 0; c < targets.cols(); ++c) {
        params.push_back(optimize_hyperparameters(dist, targets.col(c), cfg, seed, static_cast<std::size_t>(c),
                                                  trace ? &(*trace)[static_cast<std::size_t>(c)] : nullptr));
    }
    return std::make_shared<const FittedGpr>(inputs, targets, std::move(params), cfg.nu, cfg.jitter);
}

class GprBackend final : public RegressionBackend {
public:
    explicit GprBackend(GprConfig cfg = {}) : cfg_(std::move(cfg)) { cfg_.validate(); }

    std::string name() const override { return "gpr"; }
    const GprConfig& config() const { return cfg_; }

    std::shared_ptr<const FittedRegressor> fit(const FeatureMatrix& inputs, const Eigen::MatrixXd& targets,
                                               std::uint64_t seed) const override {
        return fit_gpr(inputs, targets, cfg_, seed);
    }

private:
    GprConfig cfg_;
};

namespace detail {

inline const bool gpr_loader_registered = [] {
    BackendRegistry::instance().add_loader("gpr", [](const nlohmann::json& doc) -> std::shared_ptr<const FittedRegressor> {
        return FittedGpr::from_json(doc);
    });
    return true;
}();

}  // namespace detail

}  // namespace casimac
