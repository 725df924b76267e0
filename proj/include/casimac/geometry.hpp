#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "casimac/error.hpp"

/**
 * @file geometry.hpp
 *
 * @brief Regular simplex in the latent space and the cone segmentation it induces.
 *
 * For n classes the latent space is R^(n-1). The n simplex vertices p_0..p_{n-1}
 * have unit norm and sum to zero. Segment k is the closed cone spanned by the
 * mirrored vertices -p_i, i != k; p_k lies on its central ray.
 *
 * Class indices are zero-based throughout the library.
 */

namespace casimac {

using LatentPoint = Eigen::VectorXd;
using ClassIndex = std::size_t;

class SimplexGeometry {
public:
    /// Columns of @p vertices are the vertex vectors; shape (n-1) x n.
    explicit SimplexGeometry(Eigen::MatrixXd vertices) : vertices_(std::move(vertices)) {
        if (vertices_.cols() < 2 || vertices_.rows() != vertices_.cols() - 1) {
            throw ConfigError("simplex vertex matrix must have shape (n-1) x n with n >= 2");
        }
    }

    std::size_t class_count() const { return static_cast<std::size_t>(vertices_.cols()); }
    std::size_t dimension() const { return static_cast<std::size_t>(vertices_.rows()); }

    const Eigen::MatrixXd& vertices() const { return vertices_; }
    auto vertex(ClassIndex k) const { return vertices_.col(static_cast<Eigen::Index>(k)); }

    /// Inner products <z, p_j> for every vertex. They sum to zero.
    Eigen::VectorXd scores(const LatentPoint& z) const {
        check_dim(z);
        return vertices_.transpose() * z;
    }

    void check_dim(const LatentPoint& z) const {
        if (static_cast<std::size_t>(z.size()) != dimension()) {
            throw ConfigError("latent point has dimension " + std::to_string(z.size()) +
                              ", expected " + std::to_string(dimension()));
        }
    }

private:
    Eigen::MatrixXd vertices_;
};

/**
 * Build the regular simplex for @p n classes.
 *
 * The centered, unit-scaled canonical vectors (e_i - 1/n) / sqrt((n-1)/n) of R^n are
 * projected onto the rows of the Helmert basis of the zero-sum hyperplane. For n = 2
 * this gives p_0 = (+1), p_1 = (-1).
 */
inline SimplexGeometry build_simplex(std::size_t n) {
    if (n < 2) {
        throw ConfigError("simplex needs at least 2 classes, got " + std::to_string(n));
    }
    const auto nn = static_cast<Eigen::Index>(n);
    // Helmert rows: row r (0-based) = (1,...,1 [r+1 times], -(r+1), 0, ...) / sqrt((r+1)(r+2)).
    Eigen::MatrixXd helmert = Eigen::MatrixXd::Zero(nn - 1, nn);
    for (Eigen::Index r = 0; r < nn - 1; ++r) {
        const double m = static_cast<double>(r + 1);
        const double scale = 1.0 / std::sqrt(m * (m + 1.0));
        for (Eigen::Index c = 0; c <= r; ++c) {
            helmert(r, c) = scale;
        }
        helmert(r, r + 1) = -m * scale;
    }
    const double norm = std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n));
    Eigen::MatrixXd centered = Eigen::MatrixXd::Identity(nn, nn);
    centered.array() -= 1.0 / static_cast<double>(n);
    centered /= norm;
    Eigen::MatrixXd vertices = helmert * centered;
    // Unit columns up to rounding; for n = 2 this makes p_0 = +1 and p_1 = -1 exactly.
    vertices.colwise().normalize();
    return SimplexGeometry(std::move(vertices));
}

/**
 * Label of the closest vertex, smallest index on ties.
 *
 * All vertices have unit norm, so ||z - p_k||^2 = ||z||^2 + 1 - 2<z, p_k> and the
 * nearest vertex is the one with the largest score <z, p_k>. Comparing scores keeps
 * exact ties exact (at the origin every score is 0).
 */
inline ClassIndex nearest_vertex_label(const LatentPoint& z, const SimplexGeometry& g) {
    const Eigen::VectorXd s = g.scores(z);
    ClassIndex best = 0;
    for (Eigen::Index k = 1; k < s.size(); ++k) {
        if (s(k) > s(static_cast<Eigen::Index>(best))) {
            best = static_cast<ClassIndex>(k);
        }
    }
    return best;
}

/**
 * Coefficients c_i (i != k, increasing i) solving z = sum_{i != k} c_i (-p_i).
 *
 * This is the literal cone definition and only serves as an independent check of
 * nearest_vertex_label.
 */
inline Eigen::VectorXd segment_coefficients(const LatentPoint& z, ClassIndex k,
                                            const SimplexGeometry& g) {
    g.check_dim(z);
    const std::size_t n = g.class_count();
    if (k >= n) {
        throw ConfigError("segment index " + std::to_string(k) + " out of range");
    }
    const auto d = static_cast<Eigen::Index>(g.dimension());
    Eigen::MatrixXd basis(d, d);
    Eigen::Index col = 0;
    for (ClassIndex i = 0; i < n; ++i) {
        if (i != k) {
            basis.col(col++) = -g.vertex(i);
        }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
    if (!lu.isInvertible()) {
        throw NumericalError("mirrored vertices are linearly dependent");
    }
    return lu.solve(z);
}

inline bool cone_membership_oracle(const LatentPoint& z, ClassIndex k, const SimplexGeometry& g,
                                   double tol = 1e-9) {
    return segment_coefficients(z, k, g).minCoeff() >= -tol;
}

/// b_k = ((n-1) <w, p_k> + 1) / n; sums to one and reproduces w as sum_k b_k p_k.
inline Eigen::VectorXd barycentric(const LatentPoint& w, const SimplexGeometry& g) {
    const double n = static_cast<double>(g.class_count());
    return (((n - 1.0) * g.scores(w)).array() + 1.0) / n;
}

/**
 * Segment-preserving compression of the latent space onto the open simplex.
 *
 * The barycentric weights of the image are the softmax of the vertex scores, so the
 * largest weight sits on the nearest vertex.
 */
inline LatentPoint compress(const LatentPoint& z, const SimplexGeometry& g) {
    Eigen::VectorXd s = g.scores(z);
    s.array() -= s.maxCoeff();
    Eigen::VectorXd b = s.array().exp();
    b /= b.sum();
    return g.vertices() * b;
}

/// Inverse of compress. Throws ConfigError for points on or outside the simplex boundary.
inline LatentPoint decompress(const LatentPoint& w, const SimplexGeometry& g) {
    const Eigen::VectorXd b = barycentric(w, g);
    if (!(b.array() > 0.0).all() || !(b.array() < 1.0).all()) {
        throw ConfigError("point is not strictly inside the simplex");
    }
    Eigen::VectorXd s = b.array().log();
    s.array() -= s.mean();
    const double n = static_cast<double>(g.class_count());
    return ((n - 1.0) / n) * (g.vertices() * s);
}

}  // namespace casimac
