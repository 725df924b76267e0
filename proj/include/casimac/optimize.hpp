#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace casimac {

struct BoxOptimizerOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-6;
    double value_tolerance = 1e-12;
    /// Upper bound on the infinity norm of a single step.
    double max_step = 3.0;
};

struct BoxOptimizerResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Objective returning f(x) and writing its gradient. May return +inf / NaN outside its domain.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/**
 * Minimise a smooth function over a box with a projected BFGS method.
 *
 * Variables sitting on a bound with the gradient pointing outward are frozen for the
 * step; the step is projected back onto the box and accepted by an Armijo backtracking
 * search, so the objective never increases. Non-finite trial values are rejected.
 */
inline BoxOptimizerResult minimize_box(const Objective& objective, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                                       const Eigen::VectorXd& upper, const BoxOptimizerOptions& opt = {}) {
    const Eigen::Index n = x0.size();
    auto project = [&](Eigen::VectorXd v) {
        return v.cwiseMax(lower).cwiseMin(upper).eval();
    };

    BoxOptimizerResult res;
    res.x = project(std::move(x0));
    Eigen::VectorXd g(n);
    res.value = objective(res.x, g);
    if (!std::isfinite(res.value)) {
        return res;
    }

    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        Eigen::Array<bool, Eigen::Dynamic, 1> active(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            active(i) = lower(i) >= upper(i) || (res.x(i) <= lower(i) && g(i) > 0.0) ||
                        (res.x(i) >= upper(i) && g(i) < 0.0);
        }
        const Eigen::VectorXd projected_gradient = res.x - project(res.x - g);
        if (projected_gradient.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd d = -(h * g);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (active(i)) {
                d(i) = 0.0;
            }
        }
        if (d.dot(g) >= 0.0) {
            h.setIdentity();
            d = -g;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (active(i)) {
                    d(i) = 0.0;
                }
            }
        }
        const double dmax = d.lpNorm<Eigen::Infinity>();
        if (dmax > opt.max_step) {
            d *= opt.max_step / dmax;
        }

        double t = 1.0;
        Eigen::VectorXd x_new;
        Eigen::VectorXd g_new(n);
        double f_new = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 50; ++ls, t *= 0.5) {
            x_new = project(res.x + t * d);
            f_new = objective(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * g.dot(x_new - res.x)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.converged = true;
            break;
        }

        const Eigen::VectorXd s = x_new - res.x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        const double f_old = res.value;
        res.x = x_new;
        res.value = f_new;
        g = g_new;
        if (sy > 1e-12) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
            h = (id - rho * s * y.transpose()) * h * (id - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        if (std::abs(f_old - f_new) <= opt.value_tolerance * std::max(1.0, std::abs(f_old))) {
            res.converged = true;
            ++res.iterations;
            break;
        }
    }
    return res;
}

}  // namespace casimac
