#include "ergoflow/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <vector>

namespace ergoflow {
namespace detail {

enum class NodeKind { number, variable, parameter, unary_minus, binary, call };

struct ExprNode {
    NodeKind kind;
    double value = 0.0;          // number
    std::string name;            // parameter or function name
    char op = 0;                 // binary operator
    std::shared_ptr<const ExprNode> lhs, rhs;
};

using NodePtr = std::shared_ptr<const ExprNode>;

namespace {

NodePtr make_number(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::number;
    n->value = v;
    return n;
}

NodePtr make_var() {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::variable;
    return n;
}

NodePtr make_param(std::string name) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::parameter;
    n->name = std::move(name);
    return n;
}

NodePtr make_neg(NodePtr a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::unary_minus;
    n->lhs = std::move(a);
    return n;
}

NodePtr make_binary(char op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::binary;
    n->op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

NodePtr make_call(std::string fn, NodePtr a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::call;
    n->name = std::move(fn);
    n->lhs = std::move(a);
    return n;
}

bool known_function(const std::string& f) {
    return f == "sin" || f == "cos" || f == "tanh" || f == "exp" ||
           f == "ln" || f == "sqrt" || f == "abs";
}

// expression := term (('+'|'-') term)*
// term       := unary (('*'|'/') unary)*
// unary      := '-' unary | power            so -x^2 == -(x^2)
// power      := primary ('^' unary)?         right-associative, 2^-3 legal
// primary    := number | 'x' | name | name '(' expression ')' | '(' expression ')'
class Parser {
  public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr run() {
        NodePtr e = expression();
        skip_ws();
        if (at_ < s_.size())
            throw parse_error("unexpected trailing input", at_);
        return e;
    }

  private:
    void skip_ws() {
        while (at_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[at_]))) ++at_;
    }

    char peek() {
        skip_ws();
        return at_ < s_.size() ? s_[at_] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++at_;
            return true;
        }
        return false;
    }

    NodePtr expression() {
        NodePtr e = term();
        for (;;) {
            if (accept('+'))
                e = make_binary('+', e, term());
            else if (accept('-'))
                e = make_binary('-', e, term());
            else
                return e;
        }
    }

    NodePtr term() {
        NodePtr e = unary();
        for (;;) {
            if (accept('*'))
                e = make_binary('*', e, unary());
            else if (accept('/'))
                e = make_binary('/', e, unary());
            else
                return e;
        }
    }

    NodePtr unary() {
        if (accept('-'))
            return make_neg(unary());
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^'))
            return make_binary('^', base, unary());
        return base;
    }

    NodePtr primary() {
        char c = peek();
        if (c == '(') {
            ++at_;
            NodePtr e = expression();
            if (!accept(')'))
                throw parse_error("expected ')'", at_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return name();
        throw parse_error(std::string("unexpected character '") + c + "'", at_);
    }

    NodePtr number() {
        std::size_t start = at_;
        while (at_ < s_.size() &&
               (std::isdigit(static_cast<unsigned char>(s_[at_])) || s_[at_] == '.'))
            ++at_;
        // exponent suffix: 1e-3, 2.5E+4
        if (at_ < s_.size() && (s_[at_] == 'e' || s_[at_] == 'E')) {
            std::size_t mark = at_++;
            if (at_ < s_.size() && (s_[at_] == '+' || s_[at_] == '-')) ++at_;
            if (at_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[at_]))) {
                while (at_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[at_]))) ++at_;
            } else {
                at_ = mark; // 'e' belongs to an identifier-like token, not this literal
            }
        }
        try {
            return make_number(std::stod(s_.substr(start, at_ - start)));
        } catch (const std::exception&) {
            throw parse_error("malformed number literal", start);
        }
    }

    NodePtr name() {
        std::size_t start = at_;
        while (at_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[at_])) || s_[at_] == '_'))
            ++at_;
        std::string id = s_.substr(start, at_ - start);
        if (peek() == '(') {
            if (!known_function(id))
                throw parse_error("unknown function '" + id + "'", start);
            ++at_;
            NodePtr arg = expression();
            if (!accept(')'))
                throw parse_error("expected ')' after function argument", at_);
            return make_call(id, arg);
        }
        if (id == "x")
            return make_var();
        return make_param(id);
    }

    const std::string& s_;
    std::size_t at_ = 0;
};

double eval_node(const ExprNode& n, double x, const std::map<std::string, double>& params) {
    switch (n.kind) {
    case NodeKind::number:
        return n.value;
    case NodeKind::variable:
        return x;
    case NodeKind::parameter: {
        auto it = params.find(n.name);
        if (it == params.end())
            throw std::runtime_error("unbound parameter '" + n.name + "'");
        return it->second;
    }
    case NodeKind::unary_minus:
        return -eval_node(*n.lhs, x, params);
    case NodeKind::binary: {
        double a = eval_node(*n.lhs, x, params);
        double b = eval_node(*n.rhs, x, params);
        switch (n.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        case '^': return std::pow(a, b);
        }
        return 0.0;
    }
    case NodeKind::call: {
        double a = eval_node(*n.lhs, x, params);
        if (n.name == "sin") return std::sin(a);
        if (n.name == "cos") return std::cos(a);
        if (n.name == "tanh") return std::tanh(a);
        if (n.name == "exp") return std::exp(a);
        if (n.name == "ln") return std::log(a);
        if (n.name == "sqrt") return std::sqrt(a);
        return std::fabs(a); // abs
    }
    }
    return 0.0;
}

void unparse_node(const ExprNode& n, std::string& out) {
    switch (n.kind) {
    case NodeKind::number: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", n.value);
        out += buf;
        break;
    }
    case NodeKind::variable:
        out += 'x';
        break;
    case NodeKind::parameter:
        out += n.name;
        break;
    case NodeKind::unary_minus:
        out += "(-";
        unparse_node(*n.lhs, out);
        out += ')';
        break;
    case NodeKind::binary:
        out += '(';
        unparse_node(*n.lhs, out);
        out += n.op;
        unparse_node(*n.rhs, out);
        out += ')';
        break;
    case NodeKind::call:
        out += n.name;
        out += '(';
        unparse_node(*n.lhs, out);
        out += ')';
        break;
    }
}

} // namespace
} // namespace detail

Expression Expression::parse(const std::string& src) {
    Expression e;
    e.root_ = detail::Parser(src).run();
    e.source_ = src;
    return e;
}

double Expression::eval(double x, const std::map<std::string, double>& params) const {
    return detail::eval_node(*root_, x, params);
}

std::string Expression::unparse() const {
    std::string out;
    detail::unparse_node(*root_, out);
    return out;
}

} // namespace ergoflow
