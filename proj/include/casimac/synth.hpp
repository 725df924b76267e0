#pragma once

#include <cstdint>
#include <random>

#include "casimac/dataset.hpp"
#include "casimac/random.hpp"

namespace casimac {

/// Quadrant rule on [-1, 1]^2: classes 1..4 counter-clockwise from x1 >= 0, x2 >= 0 (zero-based 0..3).
inline ClassIndex quadrant_label(double x1, double x2) {
    if (x2 >= 0.0) {
        return x1 >= 0.0 ? 0 : 1;
    }
    return x1 < 0.0 ? 2 : 3;
}

/// @p count uniform points on [-1, 1]^2 labelled by quadrant_label; class names "1".."4".
inline LabeledData synth_quadrants(std::size_t count, std::uint64_t seed) {
    Rng rng = make_rng(seed, {0x9a4du});
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LabeledData data;
    data.class_names = {"1", "2", "3", "4"};
    data.feature_names = {"x1", "x2"};
    data.features.resize(static_cast<Eigen::Index>(count), 2);
    data.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double a = u(rng);
        const double b = u(rng);
        data.features(static_cast<Eigen::Index>(i), 0) = a;
        data.features(static_cast<Eigen::Index>(i), 1) = b;
        data.labels[i] = quadrant_label(a, b);
    }
    return data;
}

}  // namespace casimac
