#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "casimac/error.hpp"
#include "casimac/geometry.hpp"
#include "casimac/transform.hpp"

namespace casimac {

/// Numeric feature rows with zero-based class indices and the original label of each index.
struct LabeledData {
    FeatureMatrix features;
    std::vector<ClassIndex> labels;
    std::vector<std::string> class_names;
    std::vector<std::string> feature_names;

    std::size_t size() const { return labels.size(); }
    std::size_t class_count() const { return class_names.size(); }

    std::vector<std::size_t> class_sizes() const {
        std::vector<std::size_t> sizes(class_names.size(), 0);
        for (ClassIndex y : labels) {
            sizes.at(y) += 1;
        }
        return sizes;
    }

    LabeledData subset(std::span<const std::size_t> rows) const {
        LabeledData out;
        out.class_names = class_names;
        out.feature_names = feature_names;
        out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
        out.labels.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
            out.labels.push_back(labels.at(rows[i]));
        }
        return out;
    }

    /// Throws DataError unless shapes agree, n >= 2 and every class has a member.
    void validate() const {
        if (static_cast<std::size_t>(features.rows()) != labels.size()) {
            throw DataError("feature rows and labels differ in length");
        }
        if (class_names.size() < 2) {
            throw DataError("at least two classes are required");
        }
        const auto sizes = class_sizes();
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            if (sizes[k] == 0) {
                throw DataError("class '" + class_names[k] + "' has no members");
            }
        }
    }
};

/// Map arbitrary labels to 0..n-1 in order of first appearance.
inline std::pair<std::vector<ClassIndex>, std::vector<std::string>> encode_labels(std::span<const std::string> raw) {
    std::vector<ClassIndex> idx;
    std::vector<std::string> names;
    std::unordered_map<std::string, ClassIndex> lookup;
    idx.reserve(raw.size());
    for (const auto& r : raw) {
        auto [it, inserted] = lookup.emplace(r, names.size());
        if (inserted) {
            names.push_back(r);
        }
        idx.push_back(it->second);
    }
    return {std::move(idx), std::move(names)};
}

}  // namespace casimac
