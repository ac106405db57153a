#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "tree.hpp"

namespace hashsimp {

using Vector = std::vector<double>;

// Column-major sample matrix: rows are samples, columns are features.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    // build from row-major nested initializer data (tests and small inputs)
    static Matrix from_rows(const std::vector<std::vector<double>>& rows)
    {
        const std::size_t cols = rows.empty() ? 0 : rows.front().size();
        Matrix m(rows.size(), cols);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != cols) {
                throw DataError("ragged rows");
            }
            for (std::size_t j = 0; j < cols; ++j) {
                m.at(i, j) = rows[i][j];
            }
        }
        return m;
    }

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }

    double& at(std::size_t row, std::size_t col) { return data_[col * rows_ + row]; }
    [[nodiscard]] double at(std::size_t row, std::size_t col) const { return data_[col * rows_ + row]; }

    [[nodiscard]] std::span<const double> column(std::size_t col) const
    {
        return std::span<const double>(data_).subspan(col * rows_, rows_);
    }

    [[nodiscard]] Matrix select_rows(std::span<const std::size_t> indices) const
    {
        Matrix out(indices.size(), cols_);
        for (std::size_t j = 0; j < cols_; ++j) {
            for (std::size_t i = 0; i < indices.size(); ++i) {
                out.at(i, j) = at(indices[i], j);
            }
        }
        return out;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Prediction vector of every subtree, indexed by preorder position.
using EvaluationTrace = std::vector<Vector>;

namespace detail {

    inline void check_features(const Tree& tree, const Matrix& X)
    {
        if (tree.max_feature() > X.cols()) {
            throw StructuralError("variable x_" + std::to_string(tree.max_feature() - 1) + " out of range for data with " + std::to_string(X.cols()) + " features");
        }
    }

    template <typename F>
    void unary(const Vector& a, Vector& out, F f)
    {
        for (std::size_t s = 0; s < out.size(); ++s) {
            out[s] = f(a[s]);
        }
    }

    template <typename F>
    void binary(const Vector& a, const Vector& b, Vector& out, F f)
    {
        for (std::size_t s = 0; s < out.size(); ++s) {
            out[s] = f(a[s], b[s]);
        }
    }

    // out = op(children...), sample-wise
    inline void apply_columns(Op op, std::span<const Vector* const> args, Vector& out)
    {
        const Vector& a = *args[0];
        switch (op) {
        case Op::Add:
            out = a;
            for (std::size_t k = 1; k < args.size(); ++k) {
                for (std::size_t s = 0; s < out.size(); ++s) {
                    out[s] += (*args[k])[s];
                }
            }
            return;
        case Op::Multiply:
            out = a;
            for (std::size_t k = 1; k < args.size(); ++k) {
                for (std::size_t s = 0; s < out.size(); ++s) {
                    out[s] *= (*args[k])[s];
                }
            }
            return;
        case Op::Subtract: return binary(a, *args[1], out, [](double x, double y) { return x - y; });
        case Op::Divide: return binary(a, *args[1], out, [](double x, double y) { return x / y; });
        case Op::Minimum: return binary(a, *args[1], out, [](double x, double y) { return x <= y ? x : y; });
        case Op::Maximum: return binary(a, *args[1], out, [](double x, double y) { return x >= y ? x : y; });
        case Op::Absolute: return unary(a, out, [](double x) { return std::abs(x); });
        case Op::Arccos: return unary(a, out, [](double x) { return std::acos(x); });
        case Op::Arcsin: return unary(a, out, [](double x) { return std::asin(x); });
        case Op::Arctan: return unary(a, out, [](double x) { return std::atan(x); });
        case Op::Cos: return unary(a, out, [](double x) { return std::cos(x); });
        case Op::Sin: return unary(a, out, [](double x) { return std::sin(x); });
        case Op::Tan: return unary(a, out, [](double x) { return std::tan(x); });
        case Op::Exp: return unary(a, out, [](double x) { return std::exp(x); });
        case Op::Log: return unary(a, out, [](double x) { return std::log(x); });
        case Op::Log1p: return unary(a, out, [](double x) { return std::log1p(x); });
        case Op::Exp1p: return unary(a, out, [](double x) { return std::exp(1.0 + x); });
        case Op::SqrtAbs: return unary(a, out, [](double x) { return std::sqrt(std::abs(x)); });
        case Op::Square: return unary(a, out, [](double x) { return x * x; });
        }
    }

} // namespace detail

// Evaluates every node. Domain violations produce NaN/inf entries; nothing throws
// except a variable index that the data cannot provide.
inline EvaluationTrace evaluate_with_trace(const Tree& tree, const Matrix& X)
{
    detail::check_features(tree, X);
    const auto nodes = tree.nodes();
    const std::size_t n = X.rows();
    EvaluationTrace trace(nodes.size());
    std::vector<std::size_t> stack; // positions of finished subtrees, last child on top
    std::vector<const Vector*> args;
    for (std::size_t i = nodes.size(); i-- > 0;) {
        const auto& node = nodes[i];
        auto& out = trace[i];
        switch (node.kind) {
        case NodeKind::Constant: out.assign(n, node.value); break;
        case NodeKind::Variable: {
            const auto col = X.column(node.feature);
            out.assign(col.begin(), col.end());
            break;
        }
        case NodeKind::Function: {
            args.clear();
            for (std::size_t k = 0; k < node.arity; ++k) {
                args.push_back(&trace[stack.back()]);
                stack.pop_back();
            }
            out.resize(n);
            detail::apply_columns(node.op, args, out);
            break;
        }
        }
        stack.push_back(i);
    }
    return trace;
}

inline Vector evaluate(const Tree& tree, const Matrix& X)
{
    auto trace = evaluate_with_trace(tree, X);
    return std::move(trace.front());
}

inline bool all_finite(std::span<const double> v)
{
    for (double x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

// Mean squared error; +inf whenever any prediction is non-finite.
inline double mse(std::span<const double> pred, std::span<const double> y)
{
    if (pred.empty()) {
        return std::numeric_limits<double>::infinity();
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - y[i];
        sum += r * r;
    }
    const double result = sum / static_cast<double>(pred.size());
    return std::isfinite(result) ? result : std::numeric_limits<double>::infinity();
}

} // namespace hashsimp
