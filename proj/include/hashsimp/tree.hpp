#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "operators.hpp"

namespace hashsimp {

enum class NodeKind : std::uint8_t { Function, Variable, Constant };

struct Node {
    NodeKind kind = NodeKind::Constant;
    Op op = Op::Add;            // Function only
    std::uint16_t arity = 0;    // 0 for terminals
    std::uint32_t feature = 0;  // Variable only
    double value = 0.0;         // Constant only

    static Node constant(double v) { return Node{NodeKind::Constant, Op::Add, 0, 0, v}; }
    static Node variable(std::size_t j) { return Node{NodeKind::Variable, Op::Add, 0, static_cast<std::uint32_t>(j), 0.0}; }
    static Node function(Op op, std::size_t arity) { return Node{NodeKind::Function, op, static_cast<std::uint16_t>(arity), 0, 0.0}; }

    [[nodiscard]] bool is_terminal() const { return kind != NodeKind::Function; }
    [[nodiscard]] bool is_constant() const { return kind == NodeKind::Constant; }
    [[nodiscard]] bool is_variable() const { return kind == NodeKind::Variable; }

    friend bool operator==(const Node& a, const Node& b)
    {
        if (a.kind != b.kind) {
            return false;
        }
        switch (a.kind) {
        case NodeKind::Function: return a.op == b.op && a.arity == b.arity;
        case NodeKind::Variable: return a.feature == b.feature;
        case NodeKind::Constant: return a.value == b.value;
        }
        return false;
    }
};

// Expression tree stored as a preorder node sequence. Position 0 is the root;
// the subtree rooted at position p occupies [p, subtree_end(p)).
class Tree {
public:
    Tree() : nodes_{Node::constant(0.0)} {}

    explicit Tree(std::vector<Node> nodes) : nodes_(std::move(nodes)) { validate(); }

    explicit Tree(Node terminal) : nodes_{terminal}
    {
        if (!terminal.is_terminal()) {
            throw StructuralError("a single-node tree must be a terminal");
        }
    }

    static Tree constant(double v) { return Tree(Node::constant(v)); }
    static Tree variable(std::size_t j) { return Tree(Node::variable(j)); }

    static Tree apply(Op op, const std::vector<Tree>& children)
    {
        std::vector<Node> nodes{Node::function(op, children.size())};
        for (const auto& child : children) {
            nodes.insert(nodes.end(), child.nodes_.begin(), child.nodes_.end());
        }
        return Tree(std::move(nodes));
    }

    [[nodiscard]] std::span<const Node> nodes() const { return nodes_; }
    [[nodiscard]] const Node& operator[](std::size_t pos) const { return nodes_[pos]; }
    [[nodiscard]] const Node& root() const { return nodes_.front(); }

    [[nodiscard]] std::size_t size() const { return nodes_.size(); }

    // one past the last position of the subtree rooted at `pos`
    [[nodiscard]] std::size_t subtree_end(std::size_t pos) const
    {
        check_position(pos);
        std::size_t open = 1;
        std::size_t i = pos;
        while (open > 0) {
            open += nodes_[i].arity;
            --open;
            ++i;
        }
        return i;
    }

    [[nodiscard]] std::size_t subtree_size(std::size_t pos) const { return subtree_end(pos) - pos; }

    [[nodiscard]] Tree subtree(std::size_t pos) const
    {
        const auto end = subtree_end(pos);
        return Tree(std::vector<Node>(nodes_.begin() + static_cast<std::ptrdiff_t>(pos),
                                      nodes_.begin() + static_cast<std::ptrdiff_t>(end)),
                    Unchecked{});
    }

    // Positions of the direct children of `pos`, in argument order.
    [[nodiscard]] std::vector<std::size_t> children(std::size_t pos) const
    {
        std::vector<std::size_t> result;
        result.reserve(nodes_[pos].arity);
        std::size_t child = pos + 1;
        for (std::size_t k = 0; k < nodes_[pos].arity; ++k) {
            result.push_back(child);
            child = subtree_end(child);
        }
        return result;
    }

    // Distance from the root for every position (root level 0).
    [[nodiscard]] std::vector<std::size_t> levels() const
    {
        std::vector<std::size_t> level(nodes_.size(), 0);
        std::vector<std::size_t> remaining; // unfinished child slots per ancestor
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            level[i] = remaining.size();
            if (nodes_[i].arity > 0) {
                remaining.push_back(nodes_[i].arity);
                continue;
            }
            // a leaf completes its parent's slot, which may complete the parent
            while (!remaining.empty()) {
                if (--remaining.back() > 0) {
                    break;
                }
                remaining.pop_back();
            }
        }
        return level;
    }

    // Longest root-to-leaf path in edges; a single node has depth 0.
    [[nodiscard]] std::size_t depth() const
    {
        const auto level = levels();
        return *std::max_element(level.begin(), level.end());
    }

    [[nodiscard]] std::size_t subtree_depth(std::size_t pos) const { return subtree(pos).depth(); }

    // Recursive complexity: c_op * sum(children); terminals carry their own weight.
    [[nodiscard]] std::int64_t complexity() const
    {
        std::vector<std::int64_t> stack;
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            const auto& n = nodes_[i];
            switch (n.kind) {
            case NodeKind::Constant: stack.push_back(kConstantComplexity); break;
            case NodeKind::Variable: stack.push_back(kVariableComplexity); break;
            case NodeKind::Function: {
                std::int64_t sum = 0;
                for (std::size_t k = 0; k < n.arity; ++k) {
                    sum += stack.back();
                    stack.pop_back();
                }
                stack.push_back(info(n.op).complexity * sum);
                break;
            }
            }
        }
        return stack.back();
    }

    [[nodiscard]] std::size_t constant_count() const
    {
        return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_constant(); }));
    }

    // Constant values in preorder.
    [[nodiscard]] std::vector<double> constants() const
    {
        std::vector<double> values;
        for (const auto& n : nodes_) {
            if (n.is_constant()) {
                values.push_back(n.value);
            }
        }
        return values;
    }

    void set_constants(std::span<const double> values)
    {
        std::size_t k = 0;
        for (auto& n : nodes_) {
            if (n.is_constant()) {
                if (k >= values.size()) {
                    throw StructuralError("too few constant values");
                }
                n.value = values[k++];
            }
        }
        if (k != values.size()) {
            throw StructuralError("too many constant values");
        }
    }

    [[nodiscard]] std::size_t max_feature() const
    {
        std::size_t m = 0;
        for (const auto& n : nodes_) {
            if (n.is_variable()) {
                m = std::max<std::size_t>(m, n.feature + 1);
            }
        }
        return m; // number of features the tree needs
    }

    // Returns a copy with the subtree at `pos` replaced by `replacement`.
    [[nodiscard]] Tree replace_subtree(std::size_t pos, const Tree& replacement) const
    {
        const auto end = subtree_end(pos);
        std::vector<Node> out;
        out.reserve(nodes_.size() - (end - pos) + replacement.size());
        out.insert(out.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(pos));
        out.insert(out.end(), replacement.nodes_.begin(), replacement.nodes_.end());
        out.insert(out.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(end), nodes_.end());
        return Tree(std::move(out), Unchecked{});
    }

    // Mutable access for in-place symbol edits that keep the arity.
    Node& mutable_node(std::size_t pos)
    {
        check_position(pos);
        return nodes_[pos];
    }

    friend bool operator==(const Tree& a, const Tree& b) { return a.nodes_ == b.nodes_; }

private:
    struct Unchecked {};
    Tree(std::vector<Node> nodes, Unchecked) : nodes_(std::move(nodes)) {}

    void check_position(std::size_t pos) const
    {
        if (pos >= nodes_.size()) {
            throw StructuralError("position " + std::to_string(pos) + " out of range for tree of size " + std::to_string(nodes_.size()));
        }
    }

    void validate() const
    {
        if (nodes_.empty()) {
            throw StructuralError("empty tree");
        }
        std::size_t open = 1;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (open == 0) {
                throw StructuralError("trailing nodes after complete tree");
            }
            const auto& n = nodes_[i];
            if (n.kind == NodeKind::Function) {
                if (!accepts_arity(n.op, n.arity, 255)) {
                    throw StructuralError("operator " + std::string(info(n.op).name) + " cannot take " + std::to_string(n.arity) + " arguments");
                }
            } else if (n.arity != 0) {
                throw StructuralError("terminal with children");
            }
            open = open - 1 + n.arity;
        }
        if (open != 0) {
            throw StructuralError("incomplete tree");
        }
    }

    std::vector<Node> nodes_;
};

} // namespace hashsimp
