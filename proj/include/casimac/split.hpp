#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "casimac/error.hpp"
#include "casimac/geometry.hpp"
#include "casimac/random.hpp"

namespace casimac {

struct SplitSpec {
    std::size_t train_count = 0;
    std::uint64_t seed = 0;
    bool stratified = true;
    /// Each class must keep at least this many training members, e.g. max(k_alpha + 1, k_beta).
    std::size_t min_per_class = 1;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> members_by_class(std::span<const ClassIndex> labels) {
    std::size_t n = 0;
    for (ClassIndex y : labels) n = std::max(n, y + 1);
    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
    return members;
}

}  // namespace detail

/**
 * Seeded train/test split. The stratified variant allocates train_count across classes
 * proportionally to their sizes, rounding by largest remainder (ties to the smaller
 * class index). Index lists are returned sorted.
 */
inline SplitIndices stratified_split(std::span<const ClassIndex> labels, const SplitSpec& spec) {
    const std::size_t total = labels.size();
    if (spec.train_count == 0 || spec.train_count > total) {
        throw ConfigError("train count must lie in 1.." + std::to_string(total));
    }
    Rng rng = make_rng(spec.seed, {0x5311u});
    SplitIndices out;
    const auto members = detail::members_by_class(labels);

    if (!spec.stratified) {
        std::vector<std::size_t> all(total);
        std::iota(all.begin(), all.end(), 0);
        std::shuffle(all.begin(), all.end(), rng);
        out.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(spec.train_count));
        out.test.assign(all.begin() + static_cast<std::ptrdiff_t>(spec.train_count), all.end());
    } else {
        std::vector<std::size_t> quota(members.size());
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t assigned = 0;
        for (std::size_t k = 0; k < members.size(); ++k) {
            const double exact = static_cast<double>(spec.train_count) * static_cast<double>(members[k].size()) /
                                 static_cast<double>(total);
            quota[k] = static_cast<std::size_t>(std::floor(exact));
            assigned += quota[k];
            remainders.emplace_back(exact - static_cast<double>(quota[k]), k);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t r = 0; assigned < spec.train_count; ++r) {
            ++quota[remainders[r].second];
            ++assigned;
        }
        for (std::size_t k = 0; k < members.size(); ++k) {
            std::vector<std::size_t> m = members[k];
            std::shuffle(m.begin(), m.end(), rng);
            out.train.insert(out.train.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(quota[k]));
            out.test.insert(out.test.end(), m.begin() + static_cast<std::ptrdiff_t>(quota[k]), m.end());
        }
    }

    std::vector<std::size_t> per_class(members.size(), 0);
    for (std::size_t i : out.train) ++per_class[labels[i]];
    for (std::size_t k = 0; k < per_class.size(); ++k) {
        if (per_class[k] < spec.min_per_class) {
            throw ConfigError("split leaves class " + std::to_string(k) + " with " + std::to_string(per_class[k]) +
                              " training members, need at least " + std::to_string(spec.min_per_class));
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

/**
 * Stratified k-fold assignment: each class is shuffled and dealt round-robin over the
 * folds, continuing where the previous class stopped. Returns the validation indices
 * of each fold, sorted.
 */
inline std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const ClassIndex> labels, std::size_t folds,
                                                              std::uint64_t seed) {
    if (folds < 2 || folds > labels.size()) {
        throw ConfigError("fold count must lie in 2.." + std::to_string(labels.size()));
    }
    Rng rng = make_rng(seed, {0xf01du});
    std::vector<std::vector<std::size_t>> out(folds);
    std::size_t next = 0;
    for (auto m : detail::members_by_class(labels)) {
        std::shuffle(m.begin(), m.end(), rng);
        for (std::size_t i : m) {
            out[next].push_back(i);
            next = (next + 1) % folds;
        }
    }
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

/// All indices in [0, total) that are not in @p excluded (which must be sorted).
inline std::vector<std::size_t> complement(std::size_t total, std::span<const std::size_t> excluded) {
    std::vector<std::size_t> out;
    out.reserve(total - excluded.size());
    std::size_t e = 0;
    for (std::size_t i = 0; i < total; ++i) {
        if (e < excluded.size() && excluded[e] == i) {
            ++e;
        } else {
            out.push_back(i);
        }
    }
    return out;
}

}  // namespace casimac
