#include <cmath>
#include <cstring>
#include <map>
#include <string>

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace hashsimp;
using namespace hashsimp::testing;

TEST(Operators, FunctionSetAndComplexityWeights)
{
    const std::map<std::string, std::int64_t> expected{
        {"add", 2}, {"subtract", 2}, {"multiply", 3}, {"maximum", 3}, {"minimum", 3}, {"square", 3}, {"absolute", 3},
        {"divide", 4}, {"sqrtabs", 4}, {"exp", 4}, {"exp1p", 5}, {"cos", 5}, {"sin", 5}, {"tan", 5},
        {"arccos", 6}, {"arcsin", 6}, {"arctan", 6}, {"log1p", 8}, {"log", 9},
    };
    ASSERT_EQ(kOperators.size(), expected.size());
    for (const auto& meta : kOperators) {
        const auto it = expected.find(std::string(meta.name));
        ASSERT_NE(it, expected.end()) << meta.name;
        EXPECT_EQ(meta.complexity, it->second) << meta.name;
        EXPECT_EQ(operator_from_name(meta.name), meta.op);
    }
    EXPECT_EQ(kConstantComplexity, 2);
    EXPECT_EQ(kVariableComplexity, 1);
}

TEST(Operators, ArityRules)
{
    EXPECT_TRUE(accepts_arity(Op::Add, 2));
    EXPECT_TRUE(accepts_arity(Op::Add, 4));
    EXPECT_FALSE(accepts_arity(Op::Add, 5));
    EXPECT_FALSE(accepts_arity(Op::Add, 1));
    EXPECT_TRUE(accepts_arity(Op::Multiply, 3));
    EXPECT_FALSE(accepts_arity(Op::Minimum, 3));
    EXPECT_FALSE(accepts_arity(Op::Subtract, 3));
    EXPECT_TRUE(accepts_arity(Op::Log, 1));
    EXPECT_FALSE(accepts_arity(Op::Log, 2));
}

TEST(Operators, LiteralReadings)
{
    const double a = 0.3;
    EXPECT_DOUBLE_EQ(apply(Op::Exp1p, std::span<const double>(&a, 1)), std::exp(1.3));
    EXPECT_DOUBLE_EQ(apply(Op::Log1p, std::span<const double>(&a, 1)), std::log(1.3));
    EXPECT_DOUBLE_EQ(apply(Op::SqrtAbs, std::span<const double>(&a, 1)), std::sqrt(0.3));
}

TEST(Evaluate, Examples)
{
    EXPECT_EQ(evaluate(x(0), Matrix::from_rows({{1}, {2}, {3}})), (Vector{1, 2, 3}));
    EXPECT_EQ(evaluate(f(Op::Add, {x(0), c(1.0)}), Matrix::from_rows({{1}, {2}})), (Vector{2, 3}));
    const auto v = evaluate(f(Op::Log, {x(0)}), Matrix::from_rows({{-1}}));
    ASSERT_EQ(v.size(), 1U);
    EXPECT_FALSE(std::isfinite(v[0]));
}

TEST(Evaluate, DomainViolationsDoNotThrow)
{
    const auto X = Matrix::from_rows({{0}, {2}});
    EXPECT_FALSE(std::isfinite(evaluate(f(Op::Divide, {c(1.0), x(0)}), X)[0]));
    EXPECT_FALSE(std::isfinite(evaluate(f(Op::Arcsin, {x(0)}), X)[1]));
    EXPECT_FALSE(std::isfinite(evaluate(f(Op::Arccos, {x(0)}), X)[1]));
}

TEST(Evaluate, VariableOutOfRange)
{
    EXPECT_THROW(evaluate(x(3), Matrix::from_rows({{1, 2}})), StructuralError);
}

TEST(Evaluate, TraceExamples)
{
    const auto trace = evaluate_with_trace(f(Op::Square, {x(0)}), Matrix::from_rows({{2}, {3}}));
    ASSERT_EQ(trace.size(), 2U);
    EXPECT_EQ(trace[0], (Vector{4, 9}));
    EXPECT_EQ(trace[1], (Vector{2, 3}));
    EXPECT_EQ(evaluate_with_trace(x(0), Matrix::from_rows({{5}})).size(), 1U);
}

TEST(Evaluate, TraceMatchesSubtreesOnRandomTrees)
{
    Rng rng(11);
    const auto X = uniform_matrix(20, 4, -2.0, 2.0, 3);
    for (int t = 0; t < 200; ++t) {
        const auto tree = random_tree(rng, 4);
        const auto trace = evaluate_with_trace(tree, X);
        ASSERT_EQ(trace.size(), count_nodes(tree));
        const auto root = evaluate(tree, X);
        ASSERT_EQ(std::memcmp(root.data(), trace[0].data(), root.size() * sizeof(double)), 0);
        for (std::size_t pos = 0; pos < tree.size(); ++pos) {
            const auto sub = evaluate(tree.subtree(pos), X);
            ASSERT_EQ(std::memcmp(sub.data(), trace[pos].data(), sub.size() * sizeof(double)), 0) << to_text(tree) << " @" << pos;
        }
        const auto again = evaluate(tree, X);
        ASSERT_EQ(std::memcmp(root.data(), again.data(), root.size() * sizeof(double)), 0);
    }
}

TEST(Metrics, Size)
{
    EXPECT_EQ(x(0).size(), 1U);
    EXPECT_EQ(f(Op::Add, {x(0), c(1.0)}).size(), 3U);
    EXPECT_EQ(parse("multiply(x_1, x_0, multiply(x_4, x_7))").size(), 6U);
}

TEST(Metrics, Depth)
{
    EXPECT_EQ(x(0).depth(), 0U);
    EXPECT_EQ(f(Op::Square, {x(0)}).depth(), 1U);
    EXPECT_EQ(f(Op::Add, {f(Op::Square, {x(0)}), x(1)}).depth(), 2U);
    EXPECT_EQ(parse("add(x_0, log(exp(sin(x_1))))").depth(), 4U);
    EXPECT_EQ(parse("add(exp(sin(x_1)), x_0)").depth(), 3U);
}

TEST(Metrics, Complexity)
{
    EXPECT_EQ(x(0).complexity(), 1);
    EXPECT_EQ(c(3.0).complexity(), 2);
    EXPECT_EQ(f(Op::Add, {x(0), c(1.0)}).complexity(), 6);
    EXPECT_EQ(f(Op::Square, {f(Op::Multiply, {x(0), x(1)})}).complexity(), 18);
}

TEST(Metrics, ComplexityAtLeastSize)
{
    Rng rng(5);
    for (int t = 0; t < 1000; ++t) {
        const auto tree = random_tree(rng, 3);
        ASSERT_GE(tree.complexity(), static_cast<std::int64_t>(tree.size()));
    }
}

TEST(Text, DumpExamples)
{
    EXPECT_EQ(to_text(f(Op::Square, {x(5)})), "square(x_5)");
    EXPECT_EQ(parse("square(x_5)"), f(Op::Square, {x(5)}));
    EXPECT_EQ(parse("add(0.0, x_2)"), f(Op::Add, {c(0.0), x(2)}));
    EXPECT_EQ(to_text(parse("maximum(add(-15.455, x_1), square(x_5))")), "maximum(add(-15.455, x_1), square(x_5))");
    EXPECT_EQ(to_text(parse("multiply(x_1, x_7, x_0, x_4)")), "multiply(x_1, x_7, x_0, x_4)");
}

TEST(Text, ConstantsAlwaysHaveFraction)
{
    EXPECT_EQ(format_constant(2.0), "2.0");
    EXPECT_EQ(format_constant(-523.249), "-523.249");
    EXPECT_EQ(format_constant(1e-7), "1.0e-07");
    EXPECT_EQ(format_constant(0.1), "0.1");
}

TEST(Text, Errors)
{
    try {
        parse("foo(x_0)");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("unknown operator"), std::string::npos);
        EXPECT_EQ(e.position(), 0U);
    }
    EXPECT_THROW(parse("add(x_0"), ParseError);
    EXPECT_THROW(parse("add(x_0,)"), ParseError);
    EXPECT_THROW(parse("log(x_0, x_1)"), ParseError);
    EXPECT_THROW(parse("x_0 x_1"), ParseError);
    EXPECT_THROW(parse(""), ParseError);
    try {
        parse("add(x_0, ?)");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 9U);
    }
}

TEST(Text, RoundTripRandomTrees)
{
    Rng rng(2024);
    for (int t = 0; t < 1000; ++t) {
        const auto tree = random_tree(rng, 8, 7, 128);
        ASSERT_EQ(parse(to_text(tree)), tree) << to_text(tree);
    }
}

TEST(ReplaceSubtree, Examples)
{
    const auto tree = f(Op::Square, {x(5)});
    EXPECT_EQ(tree.replace_subtree(0, x(1)), x(1));
    EXPECT_EQ(tree.replace_subtree(1, x(2)), f(Op::Square, {x(2)}));
    EXPECT_THROW((void)tree.replace_subtree(2, x(0)), StructuralError);
}

TEST(ReplaceSubtree, SizeIdentity)
{
    Rng rng(99);
    for (int t = 0; t < 100; ++t) {
        const auto tree = random_tree(rng, 3);
        const auto replacement = random_tree(rng, 3, 3, 10);
        const auto pos = rng.index(tree.size());
        const auto result = tree.replace_subtree(pos, replacement);
        EXPECT_EQ(result.size(), tree.size() - tree.subtree_size(pos) + replacement.size());
        EXPECT_EQ(result.subtree(pos), replacement);
        for (std::size_t i = 0; i < pos; ++i) {
            EXPECT_EQ(result[i], tree[i]);
        }
    }
}

TEST(Tree, RejectsMalformedNodeSequences)
{
    EXPECT_THROW(Tree(std::vector<Node>{}), StructuralError);
    EXPECT_THROW(Tree(std::vector<Node>{Node::function(Op::Add, 2), Node::variable(0)}), StructuralError);
    EXPECT_THROW(Tree(std::vector<Node>{Node::variable(0), Node::variable(1)}), StructuralError);
    EXPECT_THROW(Tree(std::vector<Node>{Node::function(Op::Log, 2), Node::variable(0), Node::variable(1)}), StructuralError);
}

TEST(Tree, ConstantsRoundTripInPreorder)
{
    auto tree = parse("add(1.5, multiply(x_0, 2.5), -3.0)");
    EXPECT_EQ(tree.constants(), (std::vector<double>{1.5, 2.5, -3.0}));
    const std::vector<double> values{7.0, 8.0, 9.0};
    tree.set_constants(values);
    EXPECT_EQ(to_text(tree), "add(7.0, multiply(x_0, 8.0), 9.0)");
}
