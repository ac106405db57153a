#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "eval.hpp"
#include "tree.hpp"

namespace hashsimp {

struct LevenbergMarquardtOptions {
    std::size_t max_iterations = 20;
    double initial_lambda = 1e-3;
    double lambda_factor = 10.0;
    double max_lambda = 1e16;
    double min_relative_improvement = 1e-9;
};

// r_i = f(x_i; theta) - y_i
inline Vector residuals(const Tree& tree, std::span<const double> theta, const Matrix& X, std::span<const double> y)
{
    Tree fitted = tree;
    fitted.set_constants(theta);
    auto pred = evaluate(fitted, X);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        pred[i] -= y[i];
    }
    return pred;
}

// n x p derivative matrix of the predictions with respect to the constants
// (preorder). Computed with one forward sweep and one adjoint sweep, so the
// cost does not grow with the number of constants.
inline Eigen::MatrixXd jacobian(const Tree& tree, std::span<const double> theta, const Matrix& X)
{
    Tree fitted = tree;
    fitted.set_constants(theta);
    const auto trace = evaluate_with_trace(fitted, X);
    const auto nodes = fitted.nodes();
    const std::size_t n = X.rows();

    EvaluationTrace adjoint(nodes.size());
    adjoint[0].assign(n, 1.0);
    std::vector<double> args;
    for (std::size_t pos = 0; pos < nodes.size(); ++pos) {
        const auto& node = nodes[pos];
        if (node.is_terminal()) {
            continue;
        }
        const auto kids = fitted.children(pos);
        for (auto c : kids) {
            adjoint[c].assign(n, 0.0);
        }
        args.resize(kids.size());
        for (std::size_t s = 0; s < n; ++s) {
            const double upstream = adjoint[pos][s];
            if (upstream == 0.0) {
                continue;
            }
            for (std::size_t k = 0; k < kids.size(); ++k) {
                args[k] = trace[kids[k]][s];
            }
            for (std::size_t k = 0; k < kids.size(); ++k) {
                // a zero local derivative cuts the path even below an infinite upstream
                const double local = partial(node.op, args, trace[pos][s], k);
                adjoint[kids[k]][s] = local == 0.0 ? 0.0 : upstream * local;
            }
        }
    }

    Eigen::MatrixXd J(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(fitted.constant_count()));
    Eigen::Index col = 0;
    for (std::size_t pos = 0; pos < nodes.size(); ++pos) {
        if (nodes[pos].is_constant()) {
            for (std::size_t s = 0; s < n; ++s) {
                J(static_cast<Eigen::Index>(s), col) = adjoint[pos][s];
            }
            ++col;
        }
    }
    return J;
}

struct FitResult {
    Tree tree;
    double mse;
    std::size_t iterations;
};

namespace detail {
    inline double sum_of_squares(std::span<const double> r)
    {
        double sse = 0.0;
        for (double v : r) {
            sse += v * v;
        }
        return std::isfinite(sse) ? sse : std::numeric_limits<double>::infinity();
    }
} // namespace detail

// Levenberg-Marquardt over the tree's constants with Marquardt diagonal
// scaling. Only SSE-decreasing steps are accepted, so the fit never worsens.
inline FitResult fit_constants(const Tree& tree, const Matrix& X, std::span<const double> y, const LevenbergMarquardtOptions& options = {})
{
    const auto n = static_cast<double>(X.rows());
    auto theta = tree.constants();
    auto r = residuals(tree, theta, X, y);
    double sse = detail::sum_of_squares(r);
    if (!std::isfinite(sse)) {
        return {tree, std::numeric_limits<double>::infinity(), 0};
    }
    if (theta.empty()) {
        return {tree, sse / n, 0};
    }

    const auto p = static_cast<Eigen::Index>(theta.size());
    double lambda = options.initial_lambda;
    std::size_t iter = 0;
    bool refresh = true;
    Eigen::MatrixXd A;
    Eigen::VectorXd g;
    while (iter < options.max_iterations && sse > 0.0) {
        if (refresh) {
            const auto J = jacobian(tree, theta, X);
            if (!J.allFinite()) {
                break;
            }
            const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
            A = J.transpose() * J;
            g = J.transpose() * rv;
            refresh = false;
        }
        ++iter;

        Eigen::MatrixXd damped = A;
        for (Eigen::Index k = 0; k < p; ++k) {
            damped(k, k) += lambda * std::max(A(k, k), 1e-12);
        }
        const Eigen::VectorXd delta = damped.ldlt().solve(-g);

        std::vector<double> candidate(theta);
        for (Eigen::Index k = 0; k < p; ++k) {
            candidate[static_cast<std::size_t>(k)] += delta(k);
        }
        auto r_new = residuals(tree, candidate, X, y);
        const double sse_new = delta.allFinite() ? detail::sum_of_squares(r_new) : std::numeric_limits<double>::infinity();

        if (sse_new < sse) {
            const double improvement = (sse - sse_new) / sse;
            theta = std::move(candidate);
            r = std::move(r_new);
            sse = sse_new;
            lambda /= options.lambda_factor;
            refresh = true;
            if (improvement < options.min_relative_improvement) {
                break;
            }
        } else {
            lambda *= options.lambda_factor;
            if (lambda > options.max_lambda) {
                break;
            }
        }
    }

    Tree fitted = tree;
    fitted.set_constants(theta);
    return {std::move(fitted), sse / n, iter};
}

} // namespace hashsimp
