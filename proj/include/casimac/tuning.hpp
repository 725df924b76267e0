#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "casimac/classifier.hpp"
#include "casimac/gpr.hpp"
#include "casimac/metrics.hpp"
#include "casimac/split.hpp"

/**
 * @file tuning.hpp
 *
 * @brief Grid search with stratified k-fold cross-validation.
 *
 * Grid points are scored by mean validation log-loss; the lowest wins and ties go to
 * the earlier grid point. Every grid point sees the same folds and the same per-fold
 * seeds, so scores are comparable and independent of evaluation order.
 */

namespace casimac {

struct TuningGrid {
    std::vector<double> gammas{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<std::size_t> k_alphas{1};
    std::vector<std::size_t> k_betas{1};
    std::vector<std::string> metrics{"euclidean"};
    std::vector<double> nus{0.5, 1.5, 2.5};
};

struct GridPoint {
    double gamma = 1.0;
    std::size_t k_alpha = 1;
    std::size_t k_beta = 1;
    std::string metric = "euclidean";
    double nu = 2.5;

    TransformConfig transform() const { return gamma_config(gamma, k_alpha, k_beta, metric); }
};

/// Grid in lexicographic order gamma, k_alpha, k_beta, metric, nu (nu varies fastest).
inline std::vector<GridPoint> expand_grid(const TuningGrid& grid) {
    std::vector<GridPoint> out;
    for (double g : grid.gammas)
        for (std::size_t ka : grid.k_alphas)
            for (std::size_t kb : grid.k_betas)
                for (const auto& m : grid.metrics)
                    for (double nu : grid.nus) out.push_back({g, ka, kb, m, nu});
    if (out.empty()) {
        throw ConfigError("tuning grid is empty");
    }
    return out;
}

struct CvOptions {
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    std::size_t mc_samples = 10000;
    GprConfig gpr{};
    FitOptions fit{};
};

struct GridScore {
    GridPoint point;
    /// Mean validation log-loss; empty when the point was skipped.
    std::optional<double> log_loss;
    std::vector<double> fold_log_loss;
    std::string message;
};

struct TuningResult {
    std::size_t best_index = 0;
    GridPoint best;
    GprConfig best_gpr;
    std::vector<GridScore> scores;
    std::vector<std::string> warnings;
};

/**
 * Cross-validated log-loss of a single configuration.
 *
 * Throws ConfigError when a training fold violates the hyperparameter constraints;
 * numerical failures propagate as NumericalError.
 */
inline GridScore cross_validate(const LabeledData& data, const GridPoint& point,
                                const std::vector<std::vector<std::size_t>>& folds, const CvOptions& opt) {
    GridScore score{point, std::nullopt, {}, {}};
    GprConfig gpr = opt.gpr;
    gpr.nu = point.nu;
    const GprBackend backend(gpr);
    const TransformConfig cfg = point.transform();
    double total = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto train_rows = complement(data.size(), folds[f]);
        const LabeledData train = data.subset(train_rows);
        const LabeledData valid = data.subset(folds[f]);
        validate_config(cfg, train.class_sizes());
        const CasimacModel model = fit(train, cfg, backend, substream_seed(opt.seed, {0xc7u, f}), opt.fit);
        const McConfig mc{opt.mc_samples, substream_seed(opt.seed, {0x3cu, f})};
        const double ll = log_loss(valid.labels, model.predict_proba(valid.features, mc));
        score.fold_log_loss.push_back(ll);
        total += ll;
    }
    score.log_loss = total / static_cast<double>(folds.size());
    return score;
}

inline TuningResult grid_search_cv(const LabeledData& data, const TuningGrid& grid, const CvOptions& opt) {
    data.validate();
    const auto folds = stratified_kfold(data.labels, opt.folds, opt.seed);
    TuningResult result;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    const auto points = expand_grid(grid);
    for (std::size_t i = 0; i < points.size(); ++i) {
        GridScore score{points[i], std::nullopt, {}, {}};
        try {
            score = cross_validate(data, points[i], folds, opt);
        } catch (const ConfigError& e) {
            score.message = e.what();
        } catch (const DataError& e) {
            score.message = e.what();
        } catch (const NumericalError& e) {
            score.message = e.what();
        }
        if (!score.log_loss) {
            result.warnings.push_back("grid point " + std::to_string(i) + " skipped: " + score.message);
        } else if (*score.log_loss < best) {
            best = *score.log_loss;
            result.best_index = i;
            found = true;
        }
        result.scores.push_back(std::move(score));
    }
    if (!found) {
        throw ConfigError("no grid point could be evaluated");
    }
    result.best = points[result.best_index];
    result.best_gpr = opt.gpr;
    result.best_gpr.nu = result.best.nu;
    return result;
}

inline nlohmann::json to_json(const GridPoint& p) {
    return {{"gamma", p.gamma}, {"k_alpha", p.k_alpha}, {"k_beta", p.k_beta}, {"metric", p.metric}, {"nu", p.nu}};
}

inline nlohmann::json to_json(const TuningResult& r) {
    nlohmann::json scores = nlohmann::json::array();
    for (std::size_t i = 0; i < r.scores.size(); ++i) {
        const auto& s = r.scores[i];
        nlohmann::json e = to_json(s.point);
        e["index"] = i;
        e["log_loss"] = s.log_loss ? nlohmann::json(*s.log_loss) : nlohmann::json(nullptr);
        e["fold_log_loss"] = s.fold_log_loss;
        if (!s.message.empty()) {
            e["skipped"] = s.message;
        }
        scores.push_back(std::move(e));
    }
    return {{"best_index", r.best_index}, {"best", to_json(r.best)}, {"scores", scores}, {"warnings", r.warnings}};
}

}  // namespace casimac
