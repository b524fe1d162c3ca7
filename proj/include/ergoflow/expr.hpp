#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>

namespace ergoflow {

/// Error raised on malformed expression input; carries the byte offset
/// of the offending token in `position`.
struct parse_error : std::runtime_error {
    parse_error(const std::string& what, std::size_t position)
        : std::runtime_error(what), position(position) {}
    std::size_t position;
};

namespace detail {
struct ExprNode;
}

/// A parsed arithmetic expression in one free variable `x` plus named
/// parameters. Grammar: real literals, x, parameter names,
/// + - * / ^ (right-assoc), unary minus, and the functions
/// sin, cos, tanh, exp, ln, sqrt, abs. Whitespace-insensitive.
class Expression {
  public:
    static Expression parse(const std::string& src);

    double eval(double x, const std::map<std::string, double>& params) const;

    /// Renders the tree back to text (fully parenthesized).
    std::string unparse() const;

    const std::string& source() const { return source_; }

  private:
    Expression() = default;
    std::shared_ptr<const detail::ExprNode> root_;
    std::string source_;
};

} // namespace ergoflow
