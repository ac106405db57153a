#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "data.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "optimizer.hpp"
#include "random.hpp"
#include "simplify.hpp"
#include "text.hpp"
#include "tree.hpp"

namespace hashsimp {

enum class Strategy { None, BottomUp, TopDown };

inline std::string_view to_string(Strategy s)
{
    switch (s) {
    case Strategy::None: return "none";
    case Strategy::BottomUp: return "bottom_up";
    case Strategy::TopDown: return "top_down";
    }
    return "none";
}

inline std::optional<Strategy> strategy_from_string(std::string_view name)
{
    if (name == "none") {
        return Strategy::None;
    }
    if (name == "bottom_up") {
        return Strategy::BottomUp;
    }
    if (name == "top_down") {
        return Strategy::TopDown;
    }
    return std::nullopt;
}

enum class Variation : std::uint8_t { Crossover, InsertNode, RemoveNode, ReplaceNode, ReplaceSubtree };
inline constexpr std::size_t kVariationCount = 5;

struct GpConfig {
    std::size_t pop_size = 80;
    std::size_t generations = 200;
    std::size_t max_depth = 7;
    std::size_t max_size = 128;
    double tolerance = 1e-2;
    std::size_t hash_bits = 256;
    bool adaptive_hash = false;
    std::size_t max_variadic_arity = kDefaultMaxVariadicArity;
    std::size_t tournament_size = 3;
    // indexed by Variation
    std::array<double, kVariationCount> variation_probabilities{0.2, 0.2, 0.2, 0.2, 0.2};
    std::uint64_t seed = 0;
    LevenbergMarquardtOptions lm{};

    void validate() const
    {
        if (pop_size == 0 || generations == 0) {
            throw ConfigError("population size and generations must be positive");
        }
        if (max_size == 0) {
            throw ConfigError("max_size must be at least 1");
        }
        if (!(tolerance > 0.0)) {
            throw ConfigError("tolerance must be positive");
        }
        if (hash_bits == 0) {
            throw ConfigError("hash_bits must be positive");
        }
        if (max_variadic_arity < 2) {
            throw ConfigError("max_variadic_arity must be at least 2");
        }
        if (tournament_size == 0) {
            throw ConfigError("tournament size must be positive");
        }
        double total = 0.0;
        for (double p : variation_probabilities) {
            if (p < 0.0) {
                throw ConfigError("variation probabilities must be non-negative");
            }
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw ConfigError("variation probabilities must sum to 1");
        }
    }
};

struct Individual {
    Tree tree;
    double train_mse = std::numeric_limits<double>::infinity();
    double val_mse = std::numeric_limits<double>::infinity();
    std::size_t size = 1;
};

inline constexpr double kMseTieTolerance = 1e-12;

// Lexicographic (train_mse, size).
inline bool better(const Individual& a, const Individual& b)
{
    const bool tie = (std::isinf(a.train_mse) && std::isinf(b.train_mse)) || std::abs(a.train_mse - b.train_mse) <= kMseTieTolerance;
    if (tie) {
        return a.size < b.size;
    }
    return a.train_mse < b.train_mse;
}

// Terminal and function sets available to the random operators.
struct Primitives {
    std::size_t features = 1;
    std::size_t max_variadic_arity = kDefaultMaxVariadicArity;

    Node random_terminal(Rng& rng) const
    {
        const auto pick = rng.index(features + 1);
        if (pick == 0) {
            return Node::constant(rng.uniform(-1.0, 1.0));
        }
        return Node::variable(pick - 1);
    }

    // A random operator whose smallest arity fits in `budget` extra child
    // nodes, together with an arity for it.
    std::pair<Op, std::size_t> random_operator(Rng& rng, std::size_t budget) const
    {
        std::array<Op, kOperatorCount> candidates{};
        std::size_t count = 0;
        for (const auto& meta : kOperators) {
            if (meta.min_arity <= budget) {
                candidates[count++] = meta.op;
            }
        }
        const Op op = candidates[rng.index(count)];
        std::size_t arity = info(op).min_arity;
        if (info(op).variadic) {
            const auto hi = std::min(max_variadic_arity, budget);
            arity = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(arity), static_cast<std::int64_t>(hi)));
        }
        return {op, arity};
    }
};

inline bool within_bounds(const Tree& tree, std::size_t max_depth, std::size_t max_size)
{
    return tree.size() <= max_size && tree.depth() <= max_depth;
}

// PTC2: draw a target size, expand random open slots with operators while the
// budget allows, then close the remaining slots with terminals.
inline Tree ptc2(Rng& rng, const Primitives& prims, std::size_t max_depth, std::size_t max_size)
{
    if (max_size == 0) {
        throw ConfigError("ptc2 needs max_size >= 1");
    }
    const auto target = static_cast<std::size_t>(rng.integer(1, static_cast<std::int64_t>(max_size)));
    if (target == 1 || max_depth == 0) {
        return Tree(prims.random_terminal(rng));
    }

    struct Building {
        Node node;
        std::vector<std::size_t> kids; // indices into `built`, filled in as slots close
    };
    struct Slot {
        std::size_t parent;
        std::size_t child;
        std::size_t depth;
    };
    std::vector<Building> built;
    std::vector<Slot> open;

    auto add_function = [&](std::size_t depth, std::size_t budget) {
        const auto [op, arity] = prims.random_operator(rng, budget);
        built.push_back(Building{Node::function(op, arity), std::vector<std::size_t>(arity, 0)});
        const auto index = built.size() - 1;
        for (std::size_t k = 0; k < arity; ++k) {
            open.push_back(Slot{index, k, depth + 1});
        }
        return index;
    };

    add_function(0, target - 1);
    while (built.size() + open.size() < target) {
        std::vector<std::size_t> expandable;
        for (std::size_t s = 0; s < open.size(); ++s) {
            if (open[s].depth < max_depth) {
                expandable.push_back(s);
            }
        }
        if (expandable.empty()) {
            break;
        }
        const auto which = expandable[rng.index(expandable.size())];
        const Slot slot = open[which];
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(which));
        const auto budget = target - built.size() - open.size() - 1;
        const auto index = add_function(slot.depth, budget);
        built[slot.parent].kids[slot.child] = index;
    }
    for (const auto& slot : open) {
        built.push_back(Building{prims.random_terminal(rng), {}});
        built[slot.parent].kids[slot.child] = built.size() - 1;
    }

    std::vector<Node> nodes;
    nodes.reserve(built.size());
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
        const auto i = stack.back();
        stack.pop_back();
        nodes.push_back(built[i].node);
        for (auto it = built[i].kids.rbegin(); it != built[i].kids.rend(); ++it) {
            stack.push_back(*it);
        }
    }
    return Tree(std::move(nodes));
}

// Index of the winner of a with-replacement tournament.
inline std::size_t tournament_select(std::span<const Individual> population, Rng& rng, std::size_t tournament_size = 3)
{
    std::size_t winner = rng.index(population.size());
    for (std::size_t k = 1; k < tournament_size; ++k) {
        const auto challenger = rng.index(population.size());
        if (better(population[challenger], population[winner])) {
            winner = challenger;
        }
    }
    return winner;
}

inline constexpr std::size_t kVariationAttempts = 10;

inline Tree crossover(const Tree& a, const Tree& b, Rng& rng, std::size_t max_depth, std::size_t max_size)
{
    for (std::size_t attempt = 0; attempt < kVariationAttempts; ++attempt) {
        const auto at = rng.index(a.size());
        const auto from = rng.index(b.size());
        auto child = a.replace_subtree(at, b.subtree(from));
        if (within_bounds(child, max_depth, max_size)) {
            return child;
        }
    }
    return a;
}

namespace detail {

    inline Tree insert_node(const Tree& tree, Rng& rng, const Primitives& prims)
    {
        const auto pos = rng.index(tree.size());
        const auto [op, arity] = prims.random_operator(rng, prims.max_variadic_arity);
        const auto keep = rng.index(arity);
        std::vector<Tree> args;
        for (std::size_t k = 0; k < arity; ++k) {
            args.push_back(k == keep ? tree.subtree(pos) : Tree(prims.random_terminal(rng)));
        }
        return tree.replace_subtree(pos, Tree::apply(op, args));
    }

    inline Tree remove_node(const Tree& tree, Rng& rng)
    {
        std::vector<std::size_t> internal;
        for (std::size_t i = 0; i < tree.size(); ++i) {
            if (!tree[i].is_terminal()) {
                internal.push_back(i);
            }
        }
        if (internal.empty()) {
            return tree;
        }
        const auto pos = internal[rng.index(internal.size())];
        const auto kids = tree.children(pos);
        return tree.replace_subtree(pos, tree.subtree(kids[rng.index(kids.size())]));
    }

    inline Tree replace_node(const Tree& tree, Rng& rng, const Primitives& prims)
    {
        Tree out = tree;
        const auto pos = rng.index(tree.size());
        auto& node = out.mutable_node(pos);
        if (node.is_terminal()) {
            node = prims.random_terminal(rng);
            return out;
        }
        std::vector<Op> same_arity;
        for (const auto& meta : kOperators) {
            if (meta.op != node.op && accepts_arity(meta.op, node.arity, prims.max_variadic_arity)) {
                same_arity.push_back(meta.op);
            }
        }
        if (!same_arity.empty()) {
            node.op = same_arity[rng.index(same_arity.size())];
        }
        return out;
    }

    inline Tree replace_random_subtree(const Tree& tree, Rng& rng, const Primitives& prims, std::size_t max_depth, std::size_t max_size)
    {
        const auto pos = rng.index(tree.size());
        const auto level = tree.levels()[pos];
        const auto outside = tree.size() - tree.subtree_size(pos);
        if (level > max_depth || outside >= max_size) {
            return tree;
        }
        return tree.replace_subtree(pos, ptc2(rng, prims, max_depth - level, max_size - outside));
    }

} // namespace detail

// Applies one mutation; results that break the bounds are retried and fall
// back to an unchanged copy.
inline Tree mutate(const Tree& tree, Variation kind, Rng& rng, const Primitives& prims, std::size_t max_depth, std::size_t max_size)
{
    for (std::size_t attempt = 0; attempt < kVariationAttempts; ++attempt) {
        Tree child;
        switch (kind) {
        case Variation::InsertNode: child = detail::insert_node(tree, rng, prims); break;
        case Variation::RemoveNode: child = detail::remove_node(tree, rng); break;
        case Variation::ReplaceNode: child = detail::replace_node(tree, rng, prims); break;
        case Variation::ReplaceSubtree: child = detail::replace_random_subtree(tree, rng, prims, max_depth, max_size); break;
        case Variation::Crossover: return tree;
        }
        if (within_bounds(child, max_depth, max_size)) {
            return child;
        }
    }
    return tree;
}

struct GenerationLog {
    std::size_t generation = 0;
    double best_val_mse = std::numeric_limits<double>::infinity();
    std::size_t simplifications = 0;
    double elapsed_seconds = 0.0;
};

struct RunResult {
    Tree model;
    std::string model_text;
    double train_mse = 0.0;
    double val_mse = 0.0;
    double test_mse = 0.0;
    std::size_t size = 0;
    std::int64_t complexity = 0;
    std::vector<GenerationLog> log;
    std::size_t total_simplifications = 0;
    std::size_t table_entries = 0;
    std::size_t table_expressions = 0;
    std::vector<TerminalCollision> collisions;
    std::size_t hash_bits = 0;
    std::shared_ptr<const SimplificationTable> table; // null for Strategy::None
    double wall_seconds = 0.0;
};

using GenerationObserver = std::function<void(std::size_t generation, std::span<const Individual> population)>;

class Engine {
public:
    Engine(const GpConfig& config, const PartitionedData& data, Strategy strategy)
        : config_(config), data_(data), strategy_(strategy), rng_(Rng::derive(config.seed, 1))
    {
        config_.validate();
        if (data.train.y.empty() || data.validation.y.empty() || data.test.y.empty()) {
            throw ConfigError("every split needs at least one sample");
        }
        prims_.features = data.train.X.cols();
        prims_.max_variadic_arity = config.max_variadic_arity;
        simplify_config_.tolerance = config.tolerance;
        simplify_config_.order = strategy == Strategy::TopDown ? TraversalOrder::TopDown : TraversalOrder::BottomUp;
        simplify_config_.enabled = strategy != Strategy::None;
        simplify_config_.max_depth = config.max_depth;
        if (strategy != Strategy::None) {
            simplifier_.emplace(data.train.X, config.hash_bits, Rng::derive(config.seed, 2), config.adaptive_hash);
        }
    }

    RunResult run(const GenerationObserver& observer = {})
    {
        const auto start = std::chrono::steady_clock::now();
        auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

        RunResult result;
        std::vector<Individual> population;
        population.reserve(config_.pop_size);
        std::size_t simplifications = 0;
        for (std::size_t i = 0; i < config_.pop_size; ++i) {
            population.push_back(process(ptc2(rng_, prims_, config_.max_depth, config_.max_size), simplifications));
        }
        finish_generation(0, population, simplifications, elapsed(), result, observer);

        for (std::size_t gen = 1; gen < config_.generations; ++gen) {
            simplifications = 0;
            std::vector<Individual> offspring;
            offspring.reserve(config_.pop_size);
            for (std::size_t i = 0; i < config_.pop_size; ++i) {
                offspring.push_back(process(breed(population), simplifications));
            }
            // elitism: the best-on-train parent replaces the worst child
            const auto elite = best_index(population);
            std::size_t worst = 0;
            for (std::size_t i = 1; i < offspring.size(); ++i) {
                if (better(offspring[worst], offspring[i])) {
                    worst = i;
                }
            }
            offspring[worst] = population[elite];
            population = std::move(offspring);
            finish_generation(gen, population, simplifications, elapsed(), result, observer);
        }

        result.model = best_.tree;
        result.model_text = to_text(best_.tree);
        result.train_mse = best_.train_mse;
        result.val_mse = best_.val_mse;
        result.test_mse = mse(evaluate(best_.tree, data_.test.X), data_.test.y);
        result.size = best_.tree.size();
        result.complexity = best_.tree.complexity();
        if (simplifier_) {
            result.table_entries = simplifier_->table().entry_count();
            result.table_expressions = simplifier_->table().expression_count();
            result.collisions = simplifier_->collisions();
            result.hash_bits = simplifier_->lsh().bits();
            result.table = std::make_shared<const SimplificationTable>(simplifier_->table());
        }
        result.wall_seconds = elapsed();
        return result;
    }

    // LM fit, then (with a strategy) simplify and fit again.
    Individual process(Tree tree, std::size_t& simplifications)
    {
        auto fit = fit_constants(tree, data_.train.X, data_.train.y, config_.lm);
        tree = std::move(fit.tree);
        if (simplifier_ && std::isfinite(fit.mse)) {
            auto simplified = simplifier_->simplify(tree, simplify_config_);
            simplifications += simplified.replacements;
            tree = fit_constants(simplified.tree, data_.train.X, data_.train.y, config_.lm).tree;
        }
        Individual ind;
        ind.train_mse = mse(evaluate(tree, data_.train.X), data_.train.y);
        ind.val_mse = mse(evaluate(tree, data_.validation.X), data_.validation.y);
        ind.size = tree.size();
        ind.tree = std::move(tree);
        return ind;
    }

private:
    Tree breed(std::span<const Individual> population)
    {
        const auto& parent = population[tournament_select(population, rng_, config_.tournament_size)];
        const auto kind = pick_variation();
        if (kind == Variation::Crossover) {
            const auto& donor = population[tournament_select(population, rng_, config_.tournament_size)];
            return crossover(parent.tree, donor.tree, rng_, config_.max_depth, config_.max_size);
        }
        return mutate(parent.tree, kind, rng_, prims_, config_.max_depth, config_.max_size);
    }

    Variation pick_variation()
    {
        const double u = rng_.unit();
        double acc = 0.0;
        for (std::size_t k = 0; k < kVariationCount; ++k) {
            acc += config_.variation_probabilities[k];
            if (u < acc) {
                return static_cast<Variation>(k);
            }
        }
        return static_cast<Variation>(kVariationCount - 1);
    }

    static std::size_t best_index(std::span<const Individual> population)
    {
        std::size_t best = 0;
        for (std::size_t i = 1; i < population.size(); ++i) {
            if (better(population[i], population[best])) {
                best = i;
            }
        }
        return best;
    }

    void finish_generation(std::size_t gen, std::span<const Individual> population, std::size_t simplifications, double seconds,
                           RunResult& result, const GenerationObserver& observer)
    {
        for (const auto& ind : population) {
            if (!has_best_ || ind.val_mse < best_.val_mse) {
                best_ = ind;
                has_best_ = true;
            }
        }
        result.total_simplifications += simplifications;
        result.log.push_back(GenerationLog{gen, best_.val_mse, simplifications, seconds});
        if (observer) {
            observer(gen, population);
        }
    }

    GpConfig config_;
    const PartitionedData& data_;
    Strategy strategy_;
    Rng rng_;
    Primitives prims_;
    SimplifyConfig simplify_config_;
    std::optional<HashSimplifier> simplifier_;
    Individual best_;
    bool has_best_ = false;
};

// Runs the generational loop and returns the best-on-validation model.
inline RunResult evolve(const GpConfig& config, const PartitionedData& data, Strategy strategy, const GenerationObserver& observer = {})
{
    return Engine(config, data, strategy).run(observer);
}

} // namespace hashsimp
