#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "error.hpp"
#include "tree.hpp"

namespace hashsimp {

// Shortest round-trip decimal, always with a fractional part ("2.0", "1.5e-07").
inline std::string format_constant(double value)
{
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    std::string text(buf.data(), end);
    if (text.find_first_of(".ni") != std::string::npos) { // has a point, or is inf/nan
        return text;
    }
    const auto exp = text.find('e');
    if (exp == std::string::npos) {
        return text + ".0";
    }
    return text.substr(0, exp) + ".0" + text.substr(exp);
}

// Functional notation: name(arg, arg, ...), variables x_<i>, decimal constants.
inline std::string to_text(const Tree& tree)
{
    std::string out;
    const auto nodes = tree.nodes();
    std::vector<std::size_t> open; // remaining arguments of each open call
    for (const auto& node : nodes) {
        switch (node.kind) {
        case NodeKind::Constant: out += format_constant(node.value); break;
        case NodeKind::Variable: out += "x_" + std::to_string(node.feature); break;
        case NodeKind::Function:
            out += info(node.op).name;
            out += '(';
            open.push_back(node.arity);
            continue;
        }
        while (!open.empty()) {
            if (--open.back() > 0) {
                out += ", ";
                break;
            }
            out += ')';
            open.pop_back();
        }
    }
    return out;
}

namespace detail {

    class TextParser {
    public:
        explicit TextParser(std::string_view text) : text_(text) {}

        Tree parse()
        {
            parse_node();
            skip_space();
            if (pos_ != text_.size()) {
                throw ParseError("unexpected trailing input", pos_);
            }
            return Tree(std::move(nodes_));
        }

    private:
        void skip_space()
        {
            while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])) != 0) {
                ++pos_;
            }
        }

        void expect(char c)
        {
            skip_space();
            if (pos_ >= text_.size() || text_[pos_] != c) {
                throw ParseError(std::string("expected '") + c + "'", pos_);
            }
            ++pos_;
        }

        void parse_node()
        {
            skip_space();
            if (pos_ >= text_.size()) {
                throw ParseError("unexpected end of input", pos_);
            }
            const char c = text_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) != 0) {
                parse_identifier();
            } else {
                parse_number();
            }
        }

        void parse_number()
        {
            const std::size_t start = pos_;
            const char* first = text_.data() + pos_;
            const char* last = text_.data() + text_.size();
            if (*first == '+') {
                ++first;
            }
            double value = 0.0;
            auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc{} || ptr == first) {
                throw ParseError("expected a number, variable or operator", start);
            }
            pos_ = static_cast<std::size_t>(ptr - text_.data());
            nodes_.push_back(Node::constant(value));
        }

        void parse_identifier()
        {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) != 0 || text_[pos_] == '_')) {
                ++pos_;
            }
            const std::string_view name = text_.substr(start, pos_ - start);
            if (name.size() > 2 && name.starts_with("x_") && name.find_first_not_of("0123456789", 2) == std::string_view::npos) {
                std::size_t feature = 0;
                std::from_chars(name.data() + 2, name.data() + name.size(), feature);
                nodes_.push_back(Node::variable(feature));
                return;
            }
            const auto op = operator_from_name(name);
            if (!op) {
                throw ParseError("unknown operator '" + std::string(name) + "'", start);
            }
            const std::size_t slot = nodes_.size();
            nodes_.push_back(Node::function(*op, 0));
            expect('(');
            std::size_t arity = 0;
            while (true) {
                parse_node();
                ++arity;
                skip_space();
                if (pos_ < text_.size() && text_[pos_] == ',') {
                    ++pos_;
                    continue;
                }
                expect(')');
                break;
            }
            if (!accepts_arity(*op, arity, 255)) {
                throw ParseError("operator '" + std::string(name) + "' cannot take " + std::to_string(arity) + " arguments", start);
            }
            nodes_[slot].arity = static_cast<std::uint16_t>(arity);
        }

        std::string_view text_;
        std::size_t pos_ = 0;
        std::vector<Node> nodes_;
    };

} // namespace detail

inline Tree parse(std::string_view text) { return detail::TextParser(text).parse(); }

} // namespace hashsimp
