#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mixprec/interval.hpp"
#include "mixprec/rational.hpp"

namespace mixprec {

enum class ExprKind { Var, Const, Neg, Sqrt, Add, Sub, Mul, Div, Let };

struct SourceLoc {
    int line = 0;
    int col = 0;
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

/// Immutable arithmetic AST node. Let(name, bound=a, body=b) carries local
/// bindings; names are unique within a function after parsing.
struct ExprNode {
    ExprKind kind;
    std::string name; // Var, Let
    Rational value;   // Const
    ExprPtr a;
    ExprPtr b;
    SourceLoc loc;
};

inline ExprPtr make_var(std::string name, SourceLoc loc = {}) {
    return std::make_shared<ExprNode>(ExprNode{ExprKind::Var, std::move(name), {}, nullptr, nullptr, loc});
}
inline ExprPtr make_const(Rational v, SourceLoc loc = {}) {
    return std::make_shared<ExprNode>(ExprNode{ExprKind::Const, {}, std::move(v), nullptr, nullptr, loc});
}
inline ExprPtr make_unary(ExprKind k, ExprPtr a, SourceLoc loc = {}) {
    return std::make_shared<ExprNode>(ExprNode{k, {}, {}, std::move(a), nullptr, loc});
}
inline ExprPtr make_binary(ExprKind k, ExprPtr a, ExprPtr b, SourceLoc loc = {}) {
    return std::make_shared<ExprNode>(ExprNode{k, {}, {}, std::move(a), std::move(b), loc});
}
inline ExprPtr make_neg(ExprPtr a) { return make_unary(ExprKind::Neg, std::move(a)); }
inline ExprPtr make_sqrt(ExprPtr a) { return make_unary(ExprKind::Sqrt, std::move(a)); }
inline ExprPtr make_add(ExprPtr a, ExprPtr b) { return make_binary(ExprKind::Add, std::move(a), std::move(b)); }
inline ExprPtr make_sub(ExprPtr a, ExprPtr b) { return make_binary(ExprKind::Sub, std::move(a), std::move(b)); }
inline ExprPtr make_mul(ExprPtr a, ExprPtr b) { return make_binary(ExprKind::Mul, std::move(a), std::move(b)); }
inline ExprPtr make_div(ExprPtr a, ExprPtr b) { return make_binary(ExprKind::Div, std::move(a), std::move(b)); }
inline ExprPtr make_let(std::string name, ExprPtr bound, ExprPtr body, SourceLoc loc = {}) {
    return std::make_shared<ExprNode>(
        ExprNode{ExprKind::Let, std::move(name), {}, std::move(bound), std::move(body), loc});
}

inline bool is_leaf(ExprKind k) { return k == ExprKind::Var || k == ExprKind::Const; }
inline bool is_unary_op(ExprKind k) { return k == ExprKind::Neg || k == ExprKind::Sqrt; }
inline bool is_binary_op(ExprKind k) {
    return k == ExprKind::Add || k == ExprKind::Sub || k == ExprKind::Mul || k == ExprKind::Div;
}
inline bool is_arith_op(ExprKind k) { return is_unary_op(k) || is_binary_op(k); }

inline OpKind to_op_kind(ExprKind k) {
    switch (k) {
        case ExprKind::Add: return OpKind::Add;
        case ExprKind::Sub: return OpKind::Sub;
        case ExprKind::Mul: return OpKind::Mul;
        case ExprKind::Div: return OpKind::Div;
        case ExprKind::Neg: return OpKind::Neg;
        case ExprKind::Sqrt: return OpKind::Sqrt;
        default: throw Error("not an arithmetic node");
    }
}

/// Number of arithmetic operations. Let bindings are transparent: the bound
/// expression is counted once, variable references are free.
inline int count_ops(const ExprPtr& e) {
    switch (e->kind) {
        case ExprKind::Var:
        case ExprKind::Const: return 0;
        case ExprKind::Neg:
        case ExprKind::Sqrt: return 1 + count_ops(e->a);
        case ExprKind::Let: return count_ops(e->a) + count_ops(e->b);
        default: return 1 + count_ops(e->a) + count_ops(e->b);
    }
}

inline bool structural_equal(const ExprPtr& x, const ExprPtr& y) {
    if (x.get() == y.get()) return true;
    if (x->kind != y->kind) return false;
    switch (x->kind) {
        case ExprKind::Var: return x->name == y->name;
        case ExprKind::Const: return x->value == y->value;
        case ExprKind::Neg:
        case ExprKind::Sqrt: return structural_equal(x->a, y->a);
        case ExprKind::Let:
            return x->name == y->name && structural_equal(x->a, y->a) && structural_equal(x->b, y->b);
        default: return structural_equal(x->a, y->a) && structural_equal(x->b, y->b);
    }
}

/// Pre-order traversal over every node, Let bounds before bodies.
inline void for_each_node(const ExprPtr& e, const std::function<void(const ExprPtr&)>& fn) {
    fn(e);
    if (e->a) for_each_node(e->a, fn);
    if (e->b) for_each_node(e->b, fn);
}

/// Capture-safe only because let names are unique within a function.
inline ExprPtr substitute(const ExprPtr& e, const std::string& name, const ExprPtr& repl) {
    switch (e->kind) {
        case ExprKind::Var: return e->name == name ? repl : e;
        case ExprKind::Const: return e;
        case ExprKind::Neg:
        case ExprKind::Sqrt: return make_unary(e->kind, substitute(e->a, name, repl), e->loc);
        case ExprKind::Let: {
            ExprPtr bound = substitute(e->a, name, repl);
            ExprPtr body = e->name == name ? e->b : substitute(e->b, name, repl);
            return make_let(e->name, bound, body, e->loc);
        }
        default:
            return make_binary(e->kind, substitute(e->a, name, repl), substitute(e->b, name, repl), e->loc);
    }
}

/// Replaces every let binding by its definition, yielding a pure tree.
inline ExprPtr inline_lets(const ExprPtr& e) {
    switch (e->kind) {
        case ExprKind::Var:
        case ExprKind::Const: return e;
        case ExprKind::Neg:
        case ExprKind::Sqrt: return make_unary(e->kind, inline_lets(e->a), e->loc);
        case ExprKind::Let: {
            ExprPtr bound = inline_lets(e->a);
            return inline_lets(substitute(e->b, e->name, bound));
        }
        default: return make_binary(e->kind, inline_lets(e->a), inline_lets(e->b), e->loc);
    }
}

/// Free variables in order of first appearance (Let bounds before bodies).
inline std::vector<std::string> free_vars_in_order(const ExprPtr& e) {
    std::vector<std::string> out;
    std::vector<std::string> bound;
    std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& n) {
        switch (n->kind) {
            case ExprKind::Var: {
                for (const auto& s : bound)
                    if (s == n->name) return;
                for (const auto& s : out)
                    if (s == n->name) return;
                out.push_back(n->name);
                return;
            }
            case ExprKind::Const: return;
            case ExprKind::Let: {
                walk(n->a);
                bound.push_back(n->name);
                walk(n->b);
                bound.pop_back();
                return;
            }
            default:
                walk(n->a);
                if (n->b) walk(n->b);
        }
    };
    walk(e);
    return out;
}

namespace detail {

inline int print_level(ExprKind k) {
    switch (k) {
        case ExprKind::Add:
        case ExprKind::Sub: return 1;
        case ExprKind::Mul:
        case ExprKind::Div: return 2;
        case ExprKind::Neg: return 3;
        default: return 4;
    }
}

inline void print_expr(const ExprPtr& e, int min_level, std::string& out) {
    int lvl = print_level(e->kind);
    bool paren = lvl < min_level;
    if (paren) out += "(";
    switch (e->kind) {
        case ExprKind::Var: out += e->name; break;
        case ExprKind::Const: out += exact_decimal_string(e->value); break;
        case ExprKind::Neg:
            out += "-";
            if (e->a->kind == ExprKind::Const) {
                // parenthesize so the sign is not folded into the literal
                out += "(";
                print_expr(e->a, 0, out);
                out += ")";
            } else {
                print_expr(e->a, 4, out); // operand tighter than unary minus needs parens
            }
            break;
        case ExprKind::Sqrt:
            out += "sqrt(";
            print_expr(e->a, 0, out);
            out += ")";
            break;
        case ExprKind::Add:
        case ExprKind::Sub:
        case ExprKind::Mul:
        case ExprKind::Div: {
            const char* sym = e->kind == ExprKind::Add   ? " + "
                              : e->kind == ExprKind::Sub ? " - "
                              : e->kind == ExprKind::Mul ? " * "
                                                         : " / ";
            print_expr(e->a, lvl, out);
            out += sym;
            print_expr(e->b, lvl + 1, out); // left-associative
            break;
        }
        case ExprKind::Let:
            throw Error("nested let cannot be printed in expression position");
    }
    if (paren) out += ")";
}

} // namespace detail

/// Source rendering of a pure expression (no lets), minimal parentheses.
inline std::string to_source(const ExprPtr& e) {
    std::string out;
    detail::print_expr(e, 0, out);
    return out;
}

} // namespace mixprec
