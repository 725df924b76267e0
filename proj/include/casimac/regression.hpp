#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "casimac/error.hpp"
#include "casimac/transform.hpp"

namespace casimac {

/// Independent normal distribution per latent dimension.
struct PredictiveDensity {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
};

/**
 * A trained regressor from feature space to latent space.
 *
 * predict_mean(x) must coincide with predict_density(x).mean. Implementations are
 * immutable after construction so concurrent prediction is safe.
 */
class FittedRegressor {
public:
    virtual ~FittedRegressor() = default;

    virtual std::string backend_name() const = 0;
    virtual std::size_t input_dimension() const = 0;
    virtual std::size_t output_dimension() const = 0;

    virtual PredictiveDensity predict_density(const Eigen::VectorXd& x) const = 0;

    virtual Eigen::VectorXd predict_mean(const Eigen::VectorXd& x) const { return predict_density(x).mean; }

    /// Everything needed to rebuild the regressor through the backend registry.
    virtual nlohmann::json to_json() const = 0;
};

/// Factory for fitted regressors. Fitting must be deterministic for a fixed seed.
class RegressionBackend {
public:
    virtual ~RegressionBackend() = default;

    virtual std::string name() const = 0;

    /// @p inputs: D x m (preprocessed features); @p targets: D x (n-1) latent points.
    virtual std::shared_ptr<const FittedRegressor> fit(const FeatureMatrix& inputs, const Eigen::MatrixXd& targets,
                                                       std::uint64_t seed) const = 0;
};

/**
 * Name -> loader table used when reading saved models.
 *
 * Downstream code registers loaders for its own backends; the built-in Gaussian
 * process registers itself under "gpr" (see gpr.hpp).
 */
class BackendRegistry {
public:
    using Loader = std::function<std::shared_ptr<const FittedRegressor>(const nlohmann::json&)>;

    static BackendRegistry& instance() {
        static BackendRegistry registry;
        return registry;
    }

    void add_loader(const std::string& name, Loader loader) {
        std::lock_guard lock(mutex_);
        loaders_[name] = std::move(loader);
    }

    std::shared_ptr<const FittedRegressor> load(const std::string& name, const nlohmann::json& doc) const {
        Loader loader;
        {
            std::lock_guard lock(mutex_);
            auto it = loaders_.find(name);
            if (it == loaders_.end()) {
                throw FormatError("no loader registered for regression backend '" + name + "'");
            }
            loader = it->second;
        }
        return loader(doc);
    }

private:
    BackendRegistry() = default;

    mutable std::mutex mutex_;
    std::map<std::string, Loader> loaders_;
};

}  // namespace casimac
