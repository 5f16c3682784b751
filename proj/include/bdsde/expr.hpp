#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bdsde/core_types.hpp"
#include "bdsde/errors.hpp"

namespace bdsde::expr {

/// Which variables an expression may reference:
///   drift         f components: t, y1..yk, z11..zkd
///   backward_load g components: t, y1..yk (z is illegal by construction)
///   time_only     weights and feature integrands: t
///   terminal      xi: w1..wd (terminal forward-noise values)
enum class Slot { drift, backward_load, time_only, terminal };

enum class Func { sin, cos, exp, sqrt, abs, min, max };

struct Node {
    enum class Kind { number, var_t, var_y, var_z, var_w, neg, add, sub, mul, div, call };
    Kind kind;
    double number = 0.0;
    int i = 0, j = 0;  // 1-based variable indices
    Func func = Func::sin;
    std::shared_ptr<const Node> a, b;
};
using NodePtr = std::shared_ptr<const Node>;

struct EvalContext {
    double t = 0.0;
    std::span<const double> y{};
    std::span<const double> z{};  // k x d row-major
    std::span<const double> w{};
    int d = 1;  // row stride of z
};

namespace detail {

inline double eval_node(const Node& n, const EvalContext& c) {
    switch (n.kind) {
        case Node::Kind::number: return n.number;
        case Node::Kind::var_t: return c.t;
        case Node::Kind::var_y: return c.y[static_cast<std::size_t>(n.i - 1)];
        case Node::Kind::var_z:
            return c.z[static_cast<std::size_t>((n.i - 1) * c.d + (n.j - 1))];
        case Node::Kind::var_w: return c.w[static_cast<std::size_t>(n.i - 1)];
        case Node::Kind::neg: return -eval_node(*n.a, c);
        case Node::Kind::add: return eval_node(*n.a, c) + eval_node(*n.b, c);
        case Node::Kind::sub: return eval_node(*n.a, c) - eval_node(*n.b, c);
        case Node::Kind::mul: return eval_node(*n.a, c) * eval_node(*n.b, c);
        case Node::Kind::div: return eval_node(*n.a, c) / eval_node(*n.b, c);
        case Node::Kind::call:
            switch (n.func) {
                case Func::sin: return std::sin(eval_node(*n.a, c));
                case Func::cos: return std::cos(eval_node(*n.a, c));
                case Func::exp: return std::exp(eval_node(*n.a, c));
                case Func::sqrt: return std::sqrt(eval_node(*n.a, c));
                case Func::abs: return std::abs(eval_node(*n.a, c));
                case Func::min: return std::min(eval_node(*n.a, c), eval_node(*n.b, c));
                case Func::max: return std::max(eval_node(*n.a, c), eval_node(*n.b, c));
            }
    }
    return 0.0;
}

inline int precedence(Node::Kind k) {
    switch (k) {
        case Node::Kind::add:
        case Node::Kind::sub: return 1;
        case Node::Kind::mul:
        case Node::Kind::div: return 2;
        case Node::Kind::neg: return 3;
        default: return 4;
    }
}

inline const char* func_name(Func f) {
    switch (f) {
        case Func::sin: return "sin";
        case Func::cos: return "cos";
        case Func::exp: return "exp";
        case Func::sqrt: return "sqrt";
        case Func::abs: return "abs";
        case Func::min: return "min";
        case Func::max: return "max";
    }
    return "?";
}

inline void print_node(const Node& n, int parent_prec, std::string& out) {
    const int prec = precedence(n.kind);
    const bool parens = prec < parent_prec;
    if (parens) out += '(';
    switch (n.kind) {
        case Node::Kind::number: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n.number);
            out += buf;
            break;
        }
        case Node::Kind::var_t: out += 't'; break;
        case Node::Kind::var_y: out += 'y' + std::to_string(n.i); break;
        case Node::Kind::var_z: out += 'z' + std::to_string(n.i) + std::to_string(n.j); break;
        case Node::Kind::var_w: out += 'w' + std::to_string(n.i); break;
        case Node::Kind::neg:
            out += '-';
            print_node(*n.a, prec, out);
            break;
        case Node::Kind::add:
        case Node::Kind::sub:
        case Node::Kind::mul:
        case Node::Kind::div: {
            print_node(*n.a, prec, out);
            const char op = n.kind == Node::Kind::add   ? '+'
                            : n.kind == Node::Kind::sub ? '-'
                            : n.kind == Node::Kind::mul ? '*'
                                                        : '/';
            out += op;
            // -, / are left-associative: a right child of equal precedence
            // needs parentheses to survive a reparse.
            print_node(*n.b, prec + 1, out);
            break;
        }
        case Node::Kind::call:
            out += func_name(n.func);
            out += '(';
            print_node(*n.a, 0, out);
            if (n.b) {
                out += ',';
                print_node(*n.b, 0, out);
            }
            out += ')';
            break;
    }
    if (parens) out += ')';
}

}  // namespace detail

/// A parsed coefficient expression; immutable, cheap to copy.
class Expression {
public:
    Expression() = default;
    Expression(NodePtr root, std::string source) : root_(std::move(root)), source_(std::move(source)) {}

    bool valid() const { return root_ != nullptr; }
    double eval(const EvalContext& ctx) const { return detail::eval_node(*root_, ctx); }
    const std::string& source() const { return source_; }

    /// Canonical text form; parse(print()) reproduces the same tree.
    std::string print() const {
        std::string out;
        detail::print_node(*root_, 0, out);
        return out;
    }

    bool structurally_equal(const Expression& other) const {
        return equal_nodes(root_.get(), other.root_.get());
    }

private:
    static bool equal_nodes(const Node* a, const Node* b) {
        if (!a || !b) return a == b;
        if (a->kind != b->kind) return false;
        switch (a->kind) {
            case Node::Kind::number: return a->number == b->number;
            case Node::Kind::var_t: return true;
            case Node::Kind::var_y:
            case Node::Kind::var_w: return a->i == b->i;
            case Node::Kind::var_z: return a->i == b->i && a->j == b->j;
            case Node::Kind::call:
                if (a->func != b->func) return false;
                [[fallthrough]];
            default:
                return equal_nodes(a->a.get(), b->a.get()) && equal_nodes(a->b.get(), b->b.get());
        }
    }

    NodePtr root_;
    std::string source_;
};

namespace detail {

class Parser {
public:
    Parser(std::string src, const Dimensions& dims, Slot slot)
        : storage_(std::move(src)), src_(storage_), dims_(dims), slot_(slot) {}

    NodePtr run() {
        if (src_.find_first_not_of(" \t\r\n") == std::string_view::npos)
            throw ParseError("empty expression", 1, 1);
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size())
            throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", 1, col());
        return e;
    }

private:
    int col() const { return static_cast<int>(pos_) + 1; }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            if (eat('+')) lhs = binary(Node::Kind::add, lhs, parse_term());
            else if (eat('-')) lhs = binary(Node::Kind::sub, lhs, parse_term());
            else return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_factor();
        for (;;) {
            if (eat('*')) lhs = binary(Node::Kind::mul, lhs, parse_factor());
            else if (eat('/')) lhs = binary(Node::Kind::div, lhs, parse_factor());
            else return lhs;
        }
    }

    NodePtr parse_factor() {
        if (eat('-')) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::neg;
            n->a = parse_factor();
            return n;
        }
        return parse_primary();
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", 1, col());
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            if (!eat(')')) throw ParseError("expected ')'", 1, col());
            return e;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", 1, col());
    }

    NodePtr parse_number() {
        const char* begin = src_.data() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) throw ParseError("malformed number", 1, col());
        pos_ += static_cast<std::size_t>(end - begin);
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::number;
        n->number = v;
        return n;
    }

    NodePtr parse_ident() {
        const int start_col = col();
        std::size_t begin = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string_view name = src_.substr(begin, pos_ - begin);

        if (name == "t") return require_time(start_col);
        if (name[0] == 'y' && name.size() > 1 && all_digits(name.substr(1)))
            return make_y(std::stoi(std::string(name.substr(1))), start_col);
        if (name[0] == 'z' && name.size() == 3 && all_digits(name.substr(1)))
            return make_z(name[1] - '0', name[2] - '0', start_col);
        if (name[0] == 'w' && name.size() > 1 && all_digits(name.substr(1)))
            return make_w(std::stoi(std::string(name.substr(1))), start_col);

        for (Func f : {Func::sin, Func::cos, Func::exp, Func::sqrt, Func::abs}) {
            if (name == func_name(f)) return parse_call(f, 1, start_col);
        }
        for (Func f : {Func::min, Func::max}) {
            if (name == func_name(f)) return parse_call(f, 2, start_col);
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", 1, start_col);
    }

    NodePtr parse_call(Func f, int arity, int start_col) {
        if (!eat('(')) throw ParseError("expected '(' after function name", 1, col());
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::call;
        n->func = f;
        n->a = parse_expr();
        if (arity == 2) {
            if (!eat(',')) throw ParseError("expected ',' in two-argument call", 1, col());
            n->b = parse_expr();
        }
        if (!eat(')')) throw ParseError("expected ')'", 1, col());
        (void)start_col;
        return n;
    }

    static bool all_digits(std::string_view s) {
        for (char c : s)
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        return !s.empty();
    }

    NodePtr require_time(int) const {
        if (slot_ == Slot::terminal)
            throw IllegalVariable("variable t is not available in a terminal expression");
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::var_t;
        return n;
    }

    NodePtr make_y(int i, int) const {
        if (slot_ == Slot::time_only || slot_ == Slot::terminal)
            throw IllegalVariable("variable y" + std::to_string(i) +
                                  " is not available in this slot");
        if (i < 1 || i > dims_.k)
            throw IllegalVariable("y" + std::to_string(i) + " out of range for k = " +
                                  std::to_string(dims_.k));
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::var_y;
        n->i = i;
        return n;
    }

    NodePtr make_z(int i, int j, int) const {
        if (slot_ != Slot::drift)
            throw IllegalVariable("variable z" + std::to_string(i) + std::to_string(j) +
                                  " is only available in f (g never depends on z)");
        if (i < 1 || i > dims_.k || j < 1 || j > dims_.d)
            throw IllegalVariable("z" + std::to_string(i) + std::to_string(j) +
                                  " out of range for k = " + std::to_string(dims_.k) +
                                  ", d = " + std::to_string(dims_.d));
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::var_z;
        n->i = i;
        n->j = j;
        return n;
    }

    NodePtr make_w(int i, int) const {
        if (slot_ != Slot::terminal)
            throw IllegalVariable("variable w" + std::to_string(i) +
                                  " is only available in terminal expressions");
        if (i < 1 || i > dims_.d)
            throw IllegalVariable("w" + std::to_string(i) + " out of range for d = " +
                                  std::to_string(dims_.d));
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::var_w;
        n->i = i;
        return n;
    }

    std::string storage_;  // NUL-terminated backing for strtod
    std::string_view src_;
    Dimensions dims_;
    Slot slot_;
    std::size_t pos_ = 0;

    static NodePtr binary(Node::Kind k, NodePtr a, NodePtr b) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }
};

}  // namespace detail

/// Parses one coefficient expression for the given slot. z variables use one
/// digit per index (z23 = row 2, column 3), which limits k, d <= 9 in
/// expression-defined drifts.
inline Expression parse(std::string_view source, const Dimensions& dims, Slot slot) {
    detail::Parser p(std::string(source), dims, slot);
    return Expression(p.run(), std::string(source));
}

}  // namespace bdsde::expr
