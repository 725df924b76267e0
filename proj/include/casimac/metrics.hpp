#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "casimac/error.hpp"
#include "casimac/geometry.hpp"

namespace casimac {

namespace detail {

inline void check_probs(std::span<const ClassIndex> truth, const Eigen::MatrixXd& probs) {
    if (static_cast<std::size_t>(probs.rows()) != truth.size()) {
        throw DataError("probability rows and labels differ in length");
    }
    if (truth.empty()) {
        throw DataError("metrics need at least one sample");
    }
    for (ClassIndex y : truth) {
        if (y >= static_cast<std::size_t>(probs.cols())) {
            throw DataError("label outside the probability columns");
        }
    }
}

inline void check_pair(std::span<const ClassIndex> truth, std::span<const ClassIndex> predicted, std::size_t n) {
    if (truth.size() != predicted.size()) {
        throw DataError("true and predicted labels differ in length");
    }
    if (truth.empty()) {
        throw DataError("metrics need at least one sample");
    }
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= n || predicted[i] >= n) {
            throw DataError("label outside 0..n-1");
        }
    }
}

}  // namespace detail

/// One minus the mean probability assigned to the true class.
inline double proba_loss(std::span<const ClassIndex> truth, const Eigen::MatrixXd& probs) {
    detail::check_probs(truth, probs);
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        sum += probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(truth[i]));
    }
    return 1.0 - sum / static_cast<double>(truth.size());
}

constexpr double kLogLossEpsilon = 1e-15;

/// Mean cross-entropy; probabilities are clipped to [eps, 1 - eps].
inline double log_loss(std::span<const ClassIndex> truth, const Eigen::MatrixXd& probs, double eps = kLogLossEpsilon) {
    detail::check_probs(truth, probs);
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double p = probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(truth[i]));
        sum -= std::log(std::clamp(p, eps, 1.0 - eps));
    }
    return sum / static_cast<double>(truth.size());
}

/// Row = true class, column = predicted class.
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

inline ConfusionMatrix confusion_matrix(std::span<const ClassIndex> truth, std::span<const ClassIndex> predicted,
                                        std::size_t n) {
    detail::check_pair(truth, predicted, n);
    ConfusionMatrix m(n, std::vector<std::size_t>(n, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++m[truth[i]][predicted[i]];
    }
    return m;
}

inline double accuracy(std::span<const ClassIndex> truth, std::span<const ClassIndex> predicted) {
    if (truth.size() != predicted.size() || truth.empty()) {
        throw DataError("accuracy needs equally long, non-empty label lists");
    }
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        hit += truth[i] == predicted[i];
    }
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

/// Index of the largest probability, smallest index on ties.
inline std::vector<ClassIndex> argmax_rows(const Eigen::MatrixXd& probs) {
    std::vector<ClassIndex> out(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < probs.cols(); ++k) {
            if (probs(i, k) > probs(i, best)) {
                best = k;
            }
        }
        out[static_cast<std::size_t>(i)] = static_cast<ClassIndex>(best);
    }
    return out;
}

struct WeightedScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/**
 * Per-class precision, recall and F1 averaged with weights equal to the true support.
 * A class never predicted has precision 0 (and F1 0 when recall is also 0).
 */
inline WeightedScores weighted_prf(std::span<const ClassIndex> truth, std::span<const ClassIndex> predicted,
                                   std::size_t n) {
    const ConfusionMatrix m = confusion_matrix(truth, predicted, n);
    WeightedScores out;
    const double total = static_cast<double>(truth.size());
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t support = 0;
        std::size_t predicted_k = 0;
        for (std::size_t j = 0; j < n; ++j) {
            support += m[k][j];
            predicted_k += m[j][k];
        }
        if (support == 0) {
            continue;
        }
        const double tp = static_cast<double>(m[k][k]);
        const double precision = predicted_k > 0 ? tp / static_cast<double>(predicted_k) : 0.0;
        const double recall = tp / static_cast<double>(support);
        const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        const double w = static_cast<double>(support) / total;
        out.precision += w * precision;
        out.recall += w * recall;
        out.f1 += w * f1;
    }
    return out;
}

/// Fraction of samples whose true class ranks among the k most probable (ties favour smaller indices).
inline double top_k_accuracy(std::span<const ClassIndex> truth, const Eigen::MatrixXd& probs, std::size_t k) {
    detail::check_probs(truth, probs);
    if (k == 0) {
        throw ConfigError("top-k accuracy needs k >= 1");
    }
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const auto t = static_cast<Eigen::Index>(truth[i]);
        const double pt = probs(r, t);
        std::size_t rank = 0;
        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
            if (probs(r, c) > pt || (probs(r, c) == pt && c < t)) {
                ++rank;
            }
        }
        hit += rank < k;
    }
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

struct CalibrationBin {
    double lower = 0.0;
    double upper = 0.0;
    double mean_predicted = 0.0;
    double true_fraction = 0.0;
    std::size_t count = 0;
};

struct CalibrationCurve {
    std::vector<CalibrationBin> bins;
};

/// Ten equal-width bins [0, 0.1), ..., [0.9, 1.0]; empty bins are dropped.
inline CalibrationCurve calibration_curve(std::span<const int> is_positive, std::span<const double> predicted,
                                          std::size_t bin_count = 10) {
    if (is_positive.size() != predicted.size() || predicted.empty()) {
        throw DataError("calibration curve needs equally long, non-empty inputs");
    }
    std::vector<double> sum_p(bin_count, 0.0);
    std::vector<std::size_t> positives(bin_count, 0);
    std::vector<std::size_t> count(bin_count, 0);
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double p = predicted[i];
        if (!(p >= 0.0 && p <= 1.0)) {
            throw DataError("predicted probability outside [0, 1] at row " + std::to_string(i));
        }
        const auto b = std::min(static_cast<std::size_t>(p * static_cast<double>(bin_count)), bin_count - 1);
        sum_p[b] += p;
        positives[b] += is_positive[i] != 0;
        ++count[b];
    }
    CalibrationCurve curve;
    for (std::size_t b = 0; b < bin_count; ++b) {
        if (count[b] == 0) {
            continue;
        }
        const double c = static_cast<double>(count[b]);
        curve.bins.push_back({static_cast<double>(b) / static_cast<double>(bin_count),
                              static_cast<double>(b + 1) / static_cast<double>(bin_count), sum_p[b] / c,
                              static_cast<double>(positives[b]) / c, count[b]});
    }
    return curve;
}

/**
 * Area between the piecewise-linear calibration curve and the diagonal, over the
 * x-range spanned by the bin points. Segments crossing the diagonal are split at the
 * crossing so |y - x| is integrated exactly.
 */
inline double area_deviation(const CalibrationCurve& curve) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& b : curve.bins) {
        pts.emplace_back(b.mean_predicted, b.true_fraction);
    }
    std::sort(pts.begin(), pts.end());
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const auto [x0, y0] = pts[i - 1];
        const auto [x1, y1] = pts[i];
        const double w = x1 - x0;
        if (w <= 0.0) {
            continue;
        }
        const double e0 = y0 - x0;
        const double e1 = y1 - x1;
        if (e0 * e1 >= 0.0) {
            area += 0.5 * w * (std::abs(e0) + std::abs(e1));
        } else {
            const double t = e0 / (e0 - e1);
            area += 0.5 * w * (t * std::abs(e0) + (1.0 - t) * std::abs(e1));
        }
    }
    return area;
}

struct EvaluationReport {
    double accuracy = 0.0;
    double log_loss = 0.0;
    double proba_loss = 0.0;
    double precision_weighted = 0.0;
    double recall_weighted = 0.0;
    double f1_weighted = 0.0;
    ConfusionMatrix confusion;
    std::map<std::size_t, double> top_k;
};

/// Labels are taken as the nearest-segment predictions; probabilities drive the loss scores.
inline EvaluationReport evaluate(std::span<const ClassIndex> truth, std::span<const ClassIndex> predicted,
                                 const Eigen::MatrixXd& probs, std::span<const std::size_t> top_ks = {}) {
    const auto n = static_cast<std::size_t>(probs.cols());
    EvaluationReport r;
    r.accuracy = accuracy(truth, predicted);
    r.log_loss = log_loss(truth, probs);
    r.proba_loss = proba_loss(truth, probs);
    const auto prf = weighted_prf(truth, predicted, n);
    r.precision_weighted = prf.precision;
    r.recall_weighted = prf.recall;
    r.f1_weighted = prf.f1;
    r.confusion = confusion_matrix(truth, predicted, n);
    for (std::size_t k : top_ks) {
        r.top_k[k] = top_k_accuracy(truth, probs, k);
    }
    return r;
}

inline nlohmann::json to_json(const EvaluationReport& r) {
    nlohmann::json top = nlohmann::json::object();
    for (const auto& [k, v] : r.top_k) {
        top[std::to_string(k)] = v;
    }
    return {{"accuracy", r.accuracy},
            {"log_loss", r.log_loss},
            {"proba_loss", r.proba_loss},
            {"precision_weighted", r.precision_weighted},
            {"recall_weighted", r.recall_weighted},
            {"f1_weighted", r.f1_weighted},
            {"confusion", r.confusion},
            {"top_k", top}};
}

}  // namespace casimac
