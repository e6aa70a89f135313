#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixprec/expr.hpp"
#include "mixprec/interval.hpp"

namespace mixprec {

/// Expression template with metavariables. Metavariables repeat to demand
/// structurally equal subtrees (a*a - b*b needs the shared a).
struct Pattern;
using PatternPtr = std::shared_ptr<const Pattern>;

struct Pattern {
    enum class Kind { Meta, Op, Lit };
    Kind kind;
    int meta = -1;       // Meta
    ExprKind op{};       // Op
    Rational lit;        // Lit
    PatternPtr a, b;
};

inline PatternPtr pmeta(int i) {
    return std::make_shared<Pattern>(Pattern{Pattern::Kind::Meta, i, {}, {}, nullptr, nullptr});
}
inline PatternPtr plit(Rational v) {
    return std::make_shared<Pattern>(
        Pattern{Pattern::Kind::Lit, -1, {}, std::move(v), nullptr, nullptr});
}
inline PatternPtr pop(ExprKind op, PatternPtr a, PatternPtr b = nullptr) {
    return std::make_shared<Pattern>(
        Pattern{Pattern::Kind::Op, -1, op, {}, std::move(a), std::move(b)});
}

using Bindings = std::vector<ExprPtr>;

/// Interval range of a subtree over the function's input box; rules with
/// validity domains consult it before firing.
using RangeQuery = std::function<Interval(const ExprPtr&)>;

/// Real-valued identity with an optional static validity guard.
struct RewriteRule {
    std::string name;
    PatternPtr pattern;
    PatternPtr replacement;
    std::function<bool(const Bindings&, const RangeQuery&)> guard; // empty: total

    int max_meta() const {
        int m = -1;
        std::function<void(const PatternPtr&)> walk = [&](const PatternPtr& p) {
            if (!p) return;
            if (p->kind == Pattern::Kind::Meta && p->meta > m) m = p->meta;
            walk(p->a);
            walk(p->b);
        };
        walk(pattern);
        return m;
    }
};

inline bool match_pattern(const PatternPtr& p, const ExprPtr& e, Bindings& binds) {
    switch (p->kind) {
        case Pattern::Kind::Meta: {
            if (static_cast<size_t>(p->meta) >= binds.size()) binds.resize(p->meta + 1);
            if (binds[p->meta]) return structural_equal(binds[p->meta], e);
            binds[p->meta] = e;
            return true;
        }
        case Pattern::Kind::Lit:
            return e->kind == ExprKind::Const && e->value == p->lit;
        case Pattern::Kind::Op: {
            if (e->kind != p->op) return false;
            if (!match_pattern(p->a, e->a, binds)) return false;
            if (p->b) return match_pattern(p->b, e->b, binds);
            return true;
        }
    }
    return false;
}

inline ExprPtr instantiate(const PatternPtr& p, const Bindings& binds) {
    switch (p->kind) {
        case Pattern::Kind::Meta: return binds[p->meta];
        case Pattern::Kind::Lit: return make_const(p->lit);
        case Pattern::Kind::Op:
            if (p->b) return make_binary(p->op, instantiate(p->a, binds), instantiate(p->b, binds));
            return make_unary(p->op, instantiate(p->a, binds));
    }
    throw Error("bad pattern");
}

/// The fixed identity set: commutativity and associativity of + and *,
/// distribution and factoring, negation pushing, subtraction as addition,
/// division merging, guarded square-root splitting, difference of squares.
inline const std::vector<RewriteRule>& default_rules() {
    static const std::vector<RewriteRule> rules = [] {
        std::vector<RewriteRule> r;
        auto A = pmeta(0), B = pmeta(1), C = pmeta(2), D = pmeta(3);
        auto add = [](PatternPtr x, PatternPtr y) { return pop(ExprKind::Add, x, y); };
        auto sub = [](PatternPtr x, PatternPtr y) { return pop(ExprKind::Sub, x, y); };
        auto mul = [](PatternPtr x, PatternPtr y) { return pop(ExprKind::Mul, x, y); };
        auto div = [](PatternPtr x, PatternPtr y) { return pop(ExprKind::Div, x, y); };
        auto neg = [](PatternPtr x) { return pop(ExprKind::Neg, x); };
        auto sqr = [](PatternPtr x) { return pop(ExprKind::Sqrt, x); };

        auto nonzero = [](int i) {
            return [i](const Bindings& b, const RangeQuery& range) {
                return !range(b[i]).contains_zero();
            };
        };
        auto nonneg2 = [](int i, int j) {
            return [i, j](const Bindings& b, const RangeQuery& range) {
                return range(b[i]).lo.sign() >= 0 && range(b[j]).lo.sign() >= 0;
            };
        };

        r.push_back({"add-commute", add(A, B), add(B, A), {}});
        r.push_back({"mul-commute", mul(A, B), mul(B, A), {}});
        r.push_back({"add-assoc-l", add(A, add(B, C)), add(add(A, B), C), {}});
        r.push_back({"add-assoc-r", add(add(A, B), C), add(A, add(B, C)), {}});
        r.push_back({"mul-assoc-l", mul(A, mul(B, C)), mul(mul(A, B), C), {}});
        r.push_back({"mul-assoc-r", mul(mul(A, B), C), mul(A, mul(B, C)), {}});
        r.push_back({"distribute-l", mul(A, add(B, C)), add(mul(A, B), mul(A, C)), {}});
        r.push_back({"distribute-r", mul(add(A, B), C), add(mul(A, C), mul(B, C)), {}});
        r.push_back({"distribute-sub-l", mul(A, sub(B, C)), sub(mul(A, B), mul(A, C)), {}});
        r.push_back({"distribute-sub-r", mul(sub(A, B), C), sub(mul(A, C), mul(B, C)), {}});
        r.push_back({"factor-l", add(mul(A, B), mul(A, C)), mul(A, add(B, C)), {}});
        r.push_back({"factor-r", add(mul(A, C), mul(B, C)), mul(add(A, B), C), {}});
        r.push_back({"factor-sub-l", sub(mul(A, B), mul(A, C)), mul(A, sub(B, C)), {}});
        r.push_back({"factor-sub-r", sub(mul(A, C), mul(B, C)), mul(sub(A, B), C), {}});
        r.push_back({"neg-of-add", neg(add(A, B)), sub(neg(A), B), {}});
        r.push_back({"neg-of-add-inv", sub(neg(A), B), neg(add(A, B)), {}});
        r.push_back({"neg-of-sub", neg(sub(A, B)), sub(B, A), {}});
        r.push_back({"neg-of-mul", neg(mul(A, B)), mul(neg(A), B), {}});
        r.push_back({"neg-of-mul-inv", mul(neg(A), B), neg(mul(A, B)), {}});
        r.push_back({"sub-to-add-neg", sub(A, B), add(A, neg(B)), {}});
        r.push_back({"add-neg-to-sub", add(A, neg(B)), sub(A, B), {}});
        r.push_back({"double-neg", neg(neg(A)), A, {}});
        r.push_back({"div-merge", mul(div(A, B), div(C, D)), div(mul(A, C), mul(B, D)), {}});
        r.push_back({"div-split", div(mul(A, C), mul(B, D)), mul(div(A, B), div(C, D)),
                     [](const Bindings& b, const RangeQuery& range) {
                         return !range(b[1]).contains_zero() && !range(b[3]).contains_zero();
                     }});
        r.push_back({"div-of-div", div(div(A, B), C), div(A, mul(B, C)), {}});
        r.push_back({"div-of-div-inv", div(A, mul(B, C)), div(div(A, B), C),
                     [](const Bindings& b, const RangeQuery& range) {
                         return !range(b[1]).contains_zero() && !range(b[2]).contains_zero();
                     }});
        r.push_back({"mul-recip-fold", mul(A, div(plit(Rational(1)), B)), div(A, B), nonzero(1)});
        r.push_back({"recip-mul-fold", mul(div(plit(Rational(1)), B), A), div(A, B), nonzero(1)});
        r.push_back({"sqrt-split", sqr(mul(A, B)), mul(sqr(A), sqr(B)), nonneg2(0, 1)});
        r.push_back({"sqrt-merge", mul(sqr(A), sqr(B)), sqr(mul(A, B)), nonneg2(0, 1)});
        r.push_back({"diff-of-squares", mul(sub(A, B), add(A, B)), sub(mul(A, A), mul(B, B)), {}});
        r.push_back({"diff-of-squares-inv", sub(mul(A, A), mul(B, B)), mul(sub(A, B), add(A, B)), {}});
        return r;
    }();
    return rules;
}

/// One applicable (node, rule) pair; the path addresses the occurrence.
struct RuleApplication {
    std::vector<int> path; // 0: left/only child, 1: right child
    const RewriteRule* rule;
    Bindings binds;
};

inline void enumerate_applications(const ExprPtr& e, const std::vector<RewriteRule>& rules,
                                   const RangeQuery& range, std::vector<RuleApplication>& out,
                                   std::vector<int>& path) {
    for (const RewriteRule& rule : rules) {
        Bindings binds;
        if (match_pattern(rule.pattern, e, binds)) {
            if (!rule.guard || rule.guard(binds, range)) out.push_back({path, &rule, binds});
        }
    }
    if (e->a) {
        path.push_back(0);
        enumerate_applications(e->a, rules, range, out, path);
        path.pop_back();
    }
    if (e->b) {
        path.push_back(1);
        enumerate_applications(e->b, rules, range, out, path);
        path.pop_back();
    }
}

inline std::vector<RuleApplication> enumerate_applications(const ExprPtr& e,
                                                           const std::vector<RewriteRule>& rules,
                                                           const RangeQuery& range) {
    std::vector<RuleApplication> out;
    std::vector<int> path;
    enumerate_applications(e, rules, range, out, path);
    return out;
}

inline ExprPtr replace_at(const ExprPtr& e, const std::vector<int>& path, size_t depth,
                          const ExprPtr& repl) {
    if (depth == path.size()) return repl;
    if (path[depth] == 0) {
        ExprPtr na = replace_at(e->a, path, depth + 1, repl);
        if (e->b) return make_binary(e->kind, na, e->b, e->loc);
        return make_unary(e->kind, na, e->loc);
    }
    return make_binary(e->kind, e->a, replace_at(e->b, path, depth + 1, repl), e->loc);
}

inline ExprPtr apply_application(const ExprPtr& e, const RuleApplication& app) {
    ExprPtr repl = instantiate(app.rule->replacement, app.binds);
    return replace_at(e, app.path, 0, repl);
}

} // namespace mixprec
