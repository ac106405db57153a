#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace hashsimp {

// Function set. Names follow the numpy-style spelling used in table dumps.
enum class Op : std::uint8_t {
    Add,
    Subtract,
    Multiply,
    Divide,
    Absolute,
    Arccos,
    Arcsin,
    Arctan,
    Cos,
    Sin,
    Tan,
    Exp,
    Minimum,
    Maximum,
    Log,
    Log1p,
    Exp1p,
    SqrtAbs,
    Square,
};

inline constexpr std::size_t kOperatorCount = 19;
inline constexpr std::size_t kDefaultMaxVariadicArity = 4;

// Complexity weights of the terminals.
inline constexpr std::int64_t kConstantComplexity = 2;
inline constexpr std::int64_t kVariableComplexity = 1;

struct OperatorInfo {
    Op op;
    std::string_view name;
    std::size_t min_arity;
    bool variadic; // arity in [min_arity, max_variadic_arity]
    std::int64_t complexity;
};

inline constexpr std::array<OperatorInfo, kOperatorCount> kOperators{{
    {Op::Add, "add", 2, true, 2},
    {Op::Subtract, "subtract", 2, false, 2},
    {Op::Multiply, "multiply", 2, true, 3},
    {Op::Divide, "divide", 2, false, 4},
    {Op::Absolute, "absolute", 1, false, 3},
    {Op::Arccos, "arccos", 1, false, 6},
    {Op::Arcsin, "arcsin", 1, false, 6},
    {Op::Arctan, "arctan", 1, false, 6},
    {Op::Cos, "cos", 1, false, 5},
    {Op::Sin, "sin", 1, false, 5},
    {Op::Tan, "tan", 1, false, 5},
    {Op::Exp, "exp", 1, false, 4},
    {Op::Minimum, "minimum", 2, false, 3},
    {Op::Maximum, "maximum", 2, false, 3},
    {Op::Log, "log", 1, false, 9},
    {Op::Log1p, "log1p", 1, false, 8},
    {Op::Exp1p, "exp1p", 1, false, 5},
    {Op::SqrtAbs, "sqrtabs", 1, false, 4},
    {Op::Square, "square", 1, false, 3},
}};

constexpr const OperatorInfo& info(Op op) { return kOperators[static_cast<std::size_t>(op)]; }

constexpr bool accepts_arity(Op op, std::size_t arity, std::size_t max_variadic = kDefaultMaxVariadicArity)
{
    const auto& meta = info(op);
    if (meta.variadic) {
        return arity >= meta.min_arity && arity <= max_variadic;
    }
    return arity == meta.min_arity;
}

// Accepts the canonical names plus a few common short spellings.
inline std::optional<Op> operator_from_name(std::string_view name)
{
    for (const auto& meta : kOperators) {
        if (meta.name == name) {
            return meta.op;
        }
    }
    struct Alias {
        std::string_view name;
        Op op;
    };
    static constexpr std::array<Alias, 11> aliases{{
        {"sub", Op::Subtract},
        {"mul", Op::Multiply},
        {"div", Op::Divide},
        {"abs", Op::Absolute},
        {"acos", Op::Arccos},
        {"asin", Op::Arcsin},
        {"atan", Op::Arctan},
        {"min", Op::Minimum},
        {"max", Op::Maximum},
        {"sqrt_abs", Op::SqrtAbs},
        {"sqr", Op::Square},
    }};
    for (const auto& alias : aliases) {
        if (alias.name == name) {
            return alias.op;
        }
    }
    return std::nullopt;
}

namespace detail {
    // x <= 0 takes the left branch, so the derivative of |x| at 0 is -1.
    inline double sign_left(double x) { return x > 0.0 ? 1.0 : -1.0; }
} // namespace detail

// Pointwise value for one sample. `args` holds the children's values.
inline double apply(Op op, std::span<const double> args)
{
    const double a = args[0];
    switch (op) {
    case Op::Add: {
        double sum = a;
        for (std::size_t k = 1; k < args.size(); ++k) {
            sum += args[k];
        }
        return sum;
    }
    case Op::Multiply: {
        double prod = a;
        for (std::size_t k = 1; k < args.size(); ++k) {
            prod *= args[k];
        }
        return prod;
    }
    case Op::Subtract: return a - args[1];
    case Op::Divide: return a / args[1];
    case Op::Absolute: return std::abs(a);
    case Op::Arccos: return std::acos(a);
    case Op::Arcsin: return std::asin(a);
    case Op::Arctan: return std::atan(a);
    case Op::Cos: return std::cos(a);
    case Op::Sin: return std::sin(a);
    case Op::Tan: return std::tan(a);
    case Op::Exp: return std::exp(a);
    case Op::Minimum: return a <= args[1] ? a : args[1];
    case Op::Maximum: return a >= args[1] ? a : args[1];
    case Op::Log: return std::log(a);
    case Op::Log1p: return std::log1p(a);
    case Op::Exp1p: return std::exp(1.0 + a);
    case Op::SqrtAbs: return std::sqrt(std::abs(a));
    case Op::Square: return a * a;
    }
    return std::nan("");
}

// Partial derivative of the operator output with respect to argument `k` for
// one sample. Non-differentiable points take the left / first-argument branch.
inline double partial(Op op, std::span<const double> args, double value, std::size_t k)
{
    const double a = args[0];
    switch (op) {
    case Op::Add: return 1.0;
    case Op::Multiply: {
        double prod = 1.0;
        for (std::size_t j = 0; j < args.size(); ++j) {
            if (j != k) {
                prod *= args[j];
            }
        }
        return prod;
    }
    case Op::Subtract: return k == 0 ? 1.0 : -1.0;
    case Op::Divide: return k == 0 ? 1.0 / args[1] : -a / (args[1] * args[1]);
    case Op::Absolute: return detail::sign_left(a);
    case Op::Arccos: return -1.0 / std::sqrt(1.0 - a * a);
    case Op::Arcsin: return 1.0 / std::sqrt(1.0 - a * a);
    case Op::Arctan: return 1.0 / (1.0 + a * a);
    case Op::Cos: return -std::sin(a);
    case Op::Sin: return std::cos(a);
    case Op::Tan: return 1.0 + value * value;
    case Op::Exp: return value;
    case Op::Minimum: return (a <= args[1]) == (k == 0) ? 1.0 : 0.0;
    case Op::Maximum: return (a >= args[1]) == (k == 0) ? 1.0 : 0.0;
    case Op::Log: return 1.0 / a;
    case Op::Log1p: return 1.0 / (1.0 + a);
    case Op::Exp1p: return value;
    case Op::SqrtAbs: return detail::sign_left(a) / (2.0 * value);
    case Op::Square: return 2.0 * a;
    }
    return std::nan("");
}

} // namespace hashsimp
