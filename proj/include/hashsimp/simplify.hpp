#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "eval.hpp"
#include "lsh.hpp"
#include "text.hpp"
#include "tree.hpp"

namespace hashsimp {

enum class TraversalOrder { BottomUp, TopDown };

struct SimplifyConfig {
    double tolerance = 1e-2;
    TraversalOrder order = TraversalOrder::BottomUp;
    bool enabled = true;
    // replacements that would push the tree past this depth are refused
    std::size_t max_depth = std::numeric_limits<std::size_t>::max();
};

// Zero-variance vectors all map to the zero vector so that every constant
// subtree lands in the same bucket.
inline Vector canonicalize_constant(std::span<const double> pred)
{
    Vector out(pred.begin(), pred.end());
    const bool constant = std::all_of(pred.begin(), pred.end(), [&](double v) { return v == pred.front(); });
    if (constant) {
        std::fill(out.begin(), out.end(), 0.0);
    }
    return out;
}

// Hash key -> equivalence class of subtrees, kept in creation order.
class SimplificationTable {
public:
    struct Member {
        Tree tree;
        std::string text;
        std::size_t depth;
    };

    struct Entry {
        HashKey key;
        std::vector<Member> members; // insertion order
        std::size_t smallest = 0;    // index into members
    };

    [[nodiscard]] bool contains(const HashKey& key) const { return lookup_.contains(key); }
    [[nodiscard]] std::size_t entry_count() const { return entries_.size(); }
    [[nodiscard]] std::size_t expression_count() const { return expressions_; }
    [[nodiscard]] std::size_t simplification_count() const { return simplifications_; }
    [[nodiscard]] const std::vector<Entry>& entries() const { return entries_; }

    // Creates a singleton entry. Returns false if the key already exists.
    bool create(const HashKey& key, const Tree& tree)
    {
        if (contains(key)) {
            return false;
        }
        lookup_.emplace(key, entries_.size());
        entries_.push_back(Entry{key, {}, 0});
        texts_.emplace_back();
        append(entries_.size() - 1, tree);
        return true;
    }

    // Adds `tree` to an existing class; textual duplicates are ignored.
    bool add(const HashKey& key, const Tree& tree)
    {
        const auto it = lookup_.find(key);
        if (it == lookup_.end()) {
            throw std::out_of_range("hash key not present in simplification table");
        }
        return append(it->second, tree);
    }

    // Minimal-size member; ties go to the earliest inserted.
    [[nodiscard]] const Member& smallest(const HashKey& key) const
    {
        const auto it = lookup_.find(key);
        if (it == lookup_.end()) {
            throw std::out_of_range("hash key not present in simplification table");
        }
        const auto& entry = entries_[it->second];
        return entry.members[entry.smallest];
    }

    [[nodiscard]] const Entry& entry(const HashKey& key) const
    {
        const auto it = lookup_.find(key);
        if (it == lookup_.end()) {
            throw std::out_of_range("hash key not present in simplification table");
        }
        return entries_[it->second];
    }

    void count_simplification() { ++simplifications_; }

private:
    bool append(std::size_t index, const Tree& tree)
    {
        auto text = to_text(tree);
        if (!texts_[index].insert(text).second) {
            return false;
        }
        auto& entry = entries_[index];
        entry.members.push_back(Member{tree, std::move(text), tree.depth()});
        if (tree.size() < entry.members[entry.smallest].tree.size()) {
            entry.smallest = entry.members.size() - 1;
        }
        ++expressions_;
        return true;
    }

    std::vector<Entry> entries_;
    std::vector<std::unordered_set<std::string>> texts_;
    std::unordered_map<HashKey, std::size_t, HashKeyHasher> lookup_;
    std::size_t expressions_ = 0;
    std::size_t simplifications_ = 0;
};

inline const SimplificationTable::Member& smallest_entry(const SimplificationTable& table, const HashKey& key)
{
    return table.smallest(key);
}

struct TerminalCollision {
    std::string first;  // terminal that owns the key
    std::string second; // terminal that hashed onto it
};

struct InitResult {
    SimplificationTable table;
    std::vector<TerminalCollision> collisions;
};

// Seeds the table with the constant terminal and every feature, one singleton
// class each. A terminal whose key is already taken is reported, not inserted.
inline InitResult initialize_table(const Matrix& X, const Tree& constant_tree, LshIndex& lsh)
{
    if (X.rows() == 0) {
        throw std::invalid_argument("simplification table needs at least one training sample");
    }
    if (constant_tree.size() != 1 || !constant_tree.root().is_constant()) {
        throw std::invalid_argument("constant_tree must be a single constant node");
    }
    InitResult result;
    std::vector<Tree> terminals{constant_tree};
    for (std::size_t j = 0; j < X.cols(); ++j) {
        terminals.push_back(Tree::variable(j));
    }
    std::unordered_map<HashKey, std::size_t, HashKeyHasher> owner;
    for (std::size_t t = 0; t < terminals.size(); ++t) {
        const auto pred = canonicalize_constant(evaluate(terminals[t], X));
        const auto key = lsh.index(pred);
        if (const auto it = owner.find(key); it != owner.end()) {
            result.collisions.push_back({to_text(terminals[it->second]), to_text(terminals[t])});
            continue;
        }
        owner.emplace(key, t);
        result.table.create(key, terminals[t]);
    }
    return result;
}

struct Replacement {
    std::string original;
    std::string replacement;
    double distance;
};

struct SimplifyResult {
    Tree tree;
    std::size_t replacements = 0;
    std::vector<Replacement> log;
};

namespace detail {

    inline double mean(std::span<const double> v)
    {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }

    class Simplifier {
    public:
        Simplifier(const Matrix& X, SimplificationTable& table, LshIndex& lsh, const SimplifyConfig& config)
            : X_(X), table_(table), lsh_(lsh), config_(config)
        {
        }

        SimplifyResult run(const Tree& tree)
        {
            SimplifyResult result;
            if (config_.order == TraversalOrder::BottomUp) {
                auto visit = bottom_up(tree, 0, 0);
                result.tree = std::move(visit.tree);
            } else {
                trace_ = evaluate_with_trace(tree, X_);
                result.tree = top_down(tree, 0, 0);
            }
            result.replacements = replacements_;
            result.log = std::move(log_);
            return result;
        }

    private:
        struct Visit {
            Tree tree;
            Vector pred;
        };

        // Looks the subtree up and returns the class's smallest member when
        // it is strictly smaller and within tolerance. Creates an entry for
        // unseen keys.
        std::optional<Visit> lookup(const Tree& subtree, const Vector& pred, std::size_t level)
        {
            if (!all_finite(pred)) {
                return std::nullopt;
            }
            // a lone constant is the constant terminal itself
            if (subtree.size() == 1 && subtree.root().is_constant()) {
                return std::nullopt;
            }
            const auto canonical = canonicalize_constant(pred);
            const auto query = lsh_.query(canonical);
            if (!table_.contains(query.key)) {
                lsh_.index(canonical);
                table_.create(query.key, subtree);
                return std::nullopt;
            }
            if (!(query.distance <= config_.tolerance)) {
                return std::nullopt;
            }
            table_.add(query.key, subtree);
            const auto& best = table_.smallest(query.key);
            if (best.tree.size() >= subtree.size() || level + best.depth > config_.max_depth) {
                return std::nullopt;
            }
            Visit out{best.tree, {}};
            if (out.tree.size() == 1 && out.tree.root().is_constant()) {
                // a zero-variance vector is its own mean; summing would add rounding
                const bool flat = std::all_of(pred.begin(), pred.end(), [&](double v) { return v == pred.front(); });
                const double value = flat ? pred.front() : mean(pred);
                out.tree = Tree::constant(value);
                out.pred.assign(pred.size(), value);
            } else {
                out.pred = evaluate(out.tree, X_);
            }
            ++replacements_;
            table_.count_simplification();
            log_.push_back({to_text(subtree), to_text(out.tree), query.distance});
            return out;
        }

        Visit bottom_up(const Tree& tree, std::size_t pos, std::size_t level)
        {
            const auto& node = tree[pos];
            Visit visit;
            if (node.is_terminal()) {
                visit.tree = Tree(node);
                visit.pred = evaluate(visit.tree, X_);
            } else {
                std::vector<Tree> kids;
                std::vector<Vector> preds;
                kids.reserve(node.arity);
                preds.reserve(node.arity);
                for (auto child : tree.children(pos)) {
                    auto v = bottom_up(tree, child, level + 1);
                    kids.push_back(std::move(v.tree));
                    preds.push_back(std::move(v.pred));
                }
                std::vector<const Vector*> args;
                for (const auto& p : preds) {
                    args.push_back(&p);
                }
                visit.tree = Tree::apply(node.op, kids);
                visit.pred.resize(X_.rows());
                apply_columns(node.op, args, visit.pred);
            }
            if (auto replaced = lookup(visit.tree, visit.pred, level)) {
                return std::move(*replaced);
            }
            return visit;
        }

        Tree top_down(const Tree& tree, std::size_t pos, std::size_t level)
        {
            const auto subtree = tree.subtree(pos);
            if (auto replaced = lookup(subtree, trace_[pos], level)) {
                return std::move(replaced->tree);
            }
            const auto& node = tree[pos];
            if (node.is_terminal()) {
                return subtree;
            }
            std::vector<Tree> kids;
            for (auto child : tree.children(pos)) {
                kids.push_back(top_down(tree, child, level + 1));
            }
            return Tree::apply(node.op, kids);
        }

        const Matrix& X_;
        SimplificationTable& table_;
        LshIndex& lsh_;
        const SimplifyConfig& config_;
        EvaluationTrace trace_;
        std::size_t replacements_ = 0;
        std::vector<Replacement> log_;
    };

} // namespace detail

// Replaces subtrees by the smallest known member of their hash class,
// applying replacements on the fly in the configured traversal order.
inline SimplifyResult hash_simplify(const Tree& tree, const Matrix& X, SimplificationTable& table, LshIndex& lsh, const SimplifyConfig& config)
{
    if (!config.enabled) {
        return {tree, 0, {}};
    }
    return detail::Simplifier(X, table, lsh, config).run(tree);
}

// Table plus its index, optionally growing the hash length by powers of two
// until the terminals no longer collide.
class HashSimplifier {
public:
    HashSimplifier(const Matrix& X_train, std::size_t bits, std::uint64_t seed, bool adaptive = false, std::size_t max_bits = 1U << 14U)
        : X_(X_train), lsh_(bits, X_train.rows(), seed)
    {
        auto init = initialize_table(X_, Tree::constant(1.0), lsh_);
        while (adaptive && !init.collisions.empty() && lsh_.bits() * 2 <= max_bits) {
            lsh_ = LshIndex(lsh_.bits() * 2, X_.rows(), seed);
            init = initialize_table(X_, Tree::constant(1.0), lsh_);
        }
        table_ = std::move(init.table);
        collisions_ = std::move(init.collisions);
    }

    SimplifyResult simplify(const Tree& tree, const SimplifyConfig& config) { return hash_simplify(tree, X_, table_, lsh_, config); }

    [[nodiscard]] const SimplificationTable& table() const { return table_; }
    [[nodiscard]] const LshIndex& lsh() const { return lsh_; }
    [[nodiscard]] const std::vector<TerminalCollision>& collisions() const { return collisions_; }

private:
    Matrix X_;
    LshIndex lsh_;
    SimplificationTable table_;
    std::vector<TerminalCollision> collisions_;
};

// One block per entry: key bits, then members smallest first (" - text").
inline std::string dump_table(const SimplificationTable& table, std::size_t truncate_bits = 0)
{
    if (table.entry_count() == 0) {
        return {};
    }
    std::ostringstream out;
    for (const auto& entry : table.entries()) {
        if (truncate_bits > 0 && truncate_bits < entry.key.bits()) {
            out << entry.key.to_string(truncate_bits) << "...\n";
        } else {
            out << entry.key.to_string() << '\n';
        }
        std::vector<std::size_t> order(entry.members.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return entry.members[a].tree.size() < entry.members[b].tree.size();
        });
        for (auto i : order) {
            out << " - " << entry.members[i].text << '\n';
        }
        out << '\n';
    }
    out << "entries=" << table.entry_count() << " expressions=" << table.expression_count()
        << " simplifications=" << table.simplification_count() << '\n';
    return out.str();
}

} // namespace hashsimp
