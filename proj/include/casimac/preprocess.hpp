#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "casimac/error.hpp"
#include "casimac/transform.hpp"

namespace casimac {

/// Per-feature z-score with population standard deviation; zero-variance features keep scale 1.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Standardizer fit(const FeatureMatrix& x) {
        if (x.rows() == 0) {
            throw DataError("cannot standardize an empty feature matrix");
        }
        Standardizer s;
        s.mean = x.colwise().mean().transpose();
        s.scale.resize(x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double var = (x.col(j).array() - s.mean(j)).square().mean();
            const double sd = std::sqrt(var);
            s.scale(j) = sd > 0.0 ? sd : 1.0;
        }
        return s;
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        check(x.size());
        return (x - mean).cwiseQuotient(scale);
    }

    FeatureMatrix apply(const FeatureMatrix& x) const {
        check(x.cols());
        FeatureMatrix out = x;
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            out.row(i) = (x.row(i) - mean.transpose()).cwiseQuotient(scale.transpose());
        }
        return out;
    }

private:
    void check(Eigen::Index cols) const {
        if (cols != mean.size()) {
            throw DataError("feature count " + std::to_string(cols) + " does not match the fitted " +
                            std::to_string(mean.size()));
        }
    }
};

/// Per-feature min-max scaling onto [0, 1]; zero-range features map to 0.
struct MinMaxScaler {
    Eigen::VectorXd minimum;
    Eigen::VectorXd range;

    static MinMaxScaler fit(const FeatureMatrix& x) {
        if (x.rows() == 0) {
            throw DataError("cannot scale an empty feature matrix");
        }
        MinMaxScaler s;
        s.minimum = x.colwise().minCoeff().transpose();
        s.range = x.colwise().maxCoeff().transpose() - s.minimum;
        return s;
    }

    FeatureMatrix apply(const FeatureMatrix& x) const {
        if (x.cols() != minimum.size()) {
            throw DataError("feature count does not match the fitted scaler");
        }
        FeatureMatrix out(x.rows(), x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (range(j) > 0.0) {
                out.col(j) = (x.col(j).array() - minimum(j)) / range(j);
            } else {
                out.col(j).setZero();
            }
        }
        return out;
    }
};

}  // namespace casimac
