#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "casimac/error.hpp"
#include "casimac/geometry.hpp"
#include "casimac/semimetric.hpp"

/**
 * @file transform.hpp
 *
 * @brief Training-data transformation into the latent space.
 *
 * Every training point x of class y(x) is sent to
 *
 *     f(x) = alpha A(x) p_{y(x)} + sum_{y != y(x)} beta R(x, y) (-p_y)
 *
 * where A is the reciprocal mean distance to the k_alpha nearest own-class neighbours
 * and R(x, y) the mean distance to the k_beta nearest class-y neighbours. With
 * alpha + beta > 0 and positive coefficients f(x) lies strictly inside segment y(x).
 *
 * Distances are supplied as a callable over sample indices so that any item type
 * (numeric rows, strings, images) can be transformed.
 */

namespace casimac {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class F>
concept IndexDistance = requires(const F& f, std::size_t i, std::size_t j) {
    { f(i, j) } -> std::convertible_to<double>;
};

struct TransformConfig {
    double alpha = 0.0;
    double beta = 1.0;
    std::size_t k_alpha = 1;
    std::size_t k_beta = 1;
    std::string metric = "euclidean";

    bool operator==(const TransformConfig&) const = default;
};

/// Sample indices grouped by class.
using ClassPools = std::vector<std::vector<std::size_t>>;

inline ClassPools make_class_pools(std::span<const ClassIndex> labels, std::size_t class_count) {
    ClassPools pools(class_count);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= class_count) {
            throw DataError("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                            " exceeds class count " + std::to_string(class_count));
        }
        pools[labels[i]].push_back(i);
    }
    return pools;
}

/**
 * Check alpha, beta >= 0, alpha + beta > 0, k_alpha <= c - 1 and k_beta <= c, where c is
 * the smallest class size. Throws ConfigError naming the violated constraint.
 */
inline void validate_config(const TransformConfig& cfg, std::span<const std::size_t> class_sizes) {
    if (!(cfg.alpha >= 0.0) || !(cfg.beta >= 0.0)) {
        throw ConfigError("alpha and beta must be non-negative");
    }
    if (!(cfg.alpha + cfg.beta > 0.0)) {
        throw ConfigError("constraint violated: alpha + beta > 0");
    }
    if (cfg.k_alpha < 1 || cfg.k_beta < 1) {
        throw ConfigError("k_alpha and k_beta must be positive integers");
    }
    if (class_sizes.empty()) {
        throw DataError("dataset has no classes");
    }
    const std::size_t c = *std::min_element(class_sizes.begin(), class_sizes.end());
    if (c == 0) {
        throw DataError("a class has no members");
    }
    if (cfg.k_alpha > c - 1) {
        throw ConfigError("constraint violated: k_alpha <= c - 1 (k_alpha = " + std::to_string(cfg.k_alpha) +
                          ", smallest class size c = " + std::to_string(c) + ")");
    }
    if (cfg.k_beta > c) {
        throw ConfigError("constraint violated: k_beta <= c (k_beta = " + std::to_string(cfg.k_beta) +
                          ", smallest class size c = " + std::to_string(c) + ")");
    }
}

inline void validate_config(const TransformConfig& cfg, const ClassPools& pools) {
    std::vector<std::size_t> sizes;
    sizes.reserve(pools.size());
    for (const auto& p : pools) {
        sizes.push_back(p.size());
    }
    validate_config(cfg, sizes);
}

/// alpha = 1 - gamma, beta = gamma.
inline TransformConfig gamma_config(double gamma, std::size_t k_alpha, std::size_t k_beta,
                                    std::string metric = "euclidean") {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError("gamma must lie in [0, 1]");
    }
    if (k_alpha < 1 || k_beta < 1) {
        throw ConfigError("k_alpha and k_beta must be positive integers");
    }
    return {1.0 - gamma, gamma, k_alpha, k_beta, std::move(metric)};
}

/**
 * Mean of the k smallest distances from @p query to the members of @p pool.
 *
 * The query itself is skipped. With @p exclude_duplicates, pool members at distance
 * exactly zero are skipped as well, giving X \ {x} set semantics on multisets.
 */
template <IndexDistance Distance>
double mean_knn_distance(std::size_t query, std::span<const std::size_t> pool, std::size_t k,
                         const Distance& dist, bool exclude_duplicates = true) {
    if (k == 0) {
        throw ConfigError("k must be positive");
    }
    std::vector<double> d;
    d.reserve(pool.size());
    for (std::size_t j : pool) {
        if (j == query) {
            continue;
        }
        const double v = static_cast<double>(dist(query, j));
        if (exclude_duplicates && v == 0.0) {
            continue;
        }
        d.push_back(v);
    }
    if (d.size() < k) {
        throw InsufficientPoolError("only " + std::to_string(d.size()) + " neighbours available for point " +
                                    std::to_string(query) + ", need k = " + std::to_string(k));
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sum += d[i];
    }
    return sum / static_cast<double>(k);
}

template <IndexDistance Distance>
double attraction(std::size_t query, std::span<const ClassIndex> labels, const ClassPools& pools,
                  const TransformConfig& cfg, const Distance& dist) {
    return 1.0 / mean_knn_distance(query, pools.at(labels[query]), cfg.k_alpha, dist, true);
}

/// Foreign-class duplicates are kept, so an exact cross-class duplicate yields 0.
template <IndexDistance Distance>
double repulsion(std::size_t query, ClassIndex foreign_class, std::span<const ClassIndex> labels,
                 const ClassPools& pools, const TransformConfig& cfg, const Distance& dist) {
    if (foreign_class == labels[query]) {
        throw ConfigError("repulsion requires a foreign class");
    }
    return mean_knn_distance(query, pools.at(foreign_class), cfg.k_beta, dist, false);
}

/// Segment coefficients alpha A(x) + beta R(x, y) of f(x) along -p_y, y != y(x), in class order.
template <IndexDistance Distance>
Eigen::VectorXd transform_coefficients(std::size_t query, std::span<const ClassIndex> labels,
                                       const ClassPools& pools, const TransformConfig& cfg,
                                       const Distance& dist) {
    const ClassIndex own = labels[query];
    const double pull = cfg.alpha > 0.0 ? cfg.alpha * attraction(query, labels, pools, cfg, dist) : 0.0;
    Eigen::VectorXd coeff(static_cast<Eigen::Index>(pools.size() - 1));
    Eigen::Index c = 0;
    for (ClassIndex y = 0; y < pools.size(); ++y) {
        if (y == own) {
            continue;
        }
        const double push = cfg.beta > 0.0 ? cfg.beta * repulsion(query, y, labels, pools, cfg, dist) : 0.0;
        coeff(c++) = pull + push;
    }
    return coeff;
}

/// sum over y != own of coeff_y (-p_y), coefficients in class order.
inline LatentPoint latent_from_coefficients(const Eigen::VectorXd& coeff, ClassIndex own, const SimplexGeometry& g) {
    LatentPoint z = LatentPoint::Zero(static_cast<Eigen::Index>(g.dimension()));
    Eigen::Index c = 0;
    for (ClassIndex y = 0; y < g.class_count(); ++y) {
        if (y != own) {
            z -= coeff(c++) * g.vertex(y);
        }
    }
    return z;
}

template <IndexDistance Distance>
LatentPoint transform_point(std::size_t query, std::span<const ClassIndex> labels, const ClassPools& pools,
                            const TransformConfig& cfg, const SimplexGeometry& g, const Distance& dist) {
    return latent_from_coefficients(transform_coefficients(query, labels, pools, cfg, dist), labels[query], g);
}

struct LatentDataset {
    /// Row i is f(x_i); shape D x (n-1).
    Eigen::MatrixXd latent;
    std::vector<ClassIndex> labels;
    /// Data-quality findings, e.g. cross-class duplicates that put f(x) on a segment boundary.
    std::vector<std::string> warnings;
};

/**
 * Apply transform_point to every sample. Per-point failures are collected and
 * rethrown together, each tagged with its row index.
 */
template <IndexDistance Distance>
LatentDataset transform_dataset(std::span<const ClassIndex> labels, const TransformConfig& cfg,
                                const SimplexGeometry& g, const Distance& dist) {
    const ClassPools pools = make_class_pools(labels, g.class_count());
    validate_config(cfg, pools);

    LatentDataset out;
    out.labels.assign(labels.begin(), labels.end());
    out.latent.resize(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(g.dimension()));

    std::ostringstream failures;
    std::size_t failed = 0;
    bool numeric_only = true;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        try {
            const Eigen::VectorXd coeff = transform_coefficients(i, labels, pools, cfg, dist);
            if (!(coeff.array() > 0.0).all()) {
                out.warnings.push_back("row " + std::to_string(i) +
                                       ": exact duplicate in a foreign class; latent point lies on a segment boundary");
            }
            out.latent.row(static_cast<Eigen::Index>(i)) = latent_from_coefficients(coeff, labels[i], g).transpose();
        } catch (const ConfigError& e) {
            numeric_only = false;
            failures << (failed++ ? "; " : "") << "row " << i << ": " << e.what();
        } catch (const DataError& e) {
            failures << (failed++ ? "; " : "") << "row " << i << ": " << e.what();
        }
    }
    if (failed != 0) {
        const std::string msg = "transform failed for " + std::to_string(failed) + " point(s): " + failures.str();
        if (!numeric_only) {
            throw ConfigError(msg);
        }
        throw DataError(msg);
    }
    return out;
}

/// Distance over the rows of a feature matrix.
struct RowDistance {
    const FeatureMatrix* features;
    Semimetric metric;

    double operator()(std::size_t i, std::size_t j) const {
        const auto cols = static_cast<std::size_t>(features->cols());
        return metric(std::span<const double>(features->row(static_cast<Eigen::Index>(i)).data(), cols),
                      std::span<const double>(features->row(static_cast<Eigen::Index>(j)).data(), cols));
    }
};

inline LatentDataset transform_dataset(const FeatureMatrix& features, std::span<const ClassIndex> labels,
                                       const TransformConfig& cfg, const SimplexGeometry& g) {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw DataError("feature rows and labels differ in length");
    }
    return transform_dataset(labels, cfg, g, RowDistance{&features, find_semimetric(cfg.metric)});
}

}  // namespace casimac
