#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mixprec/expr.hpp"
#include "mixprec/parser.hpp"

namespace mixprec {

namespace detail {

inline std::set<std::string> all_names(const FunctionSpec& f) {
    std::set<std::string> names(f.params.begin(), f.params.end());
    for_each_node(f.body, [&](const ExprPtr& n) {
        if (n->kind == ExprKind::Let || n->kind == ExprKind::Var) names.insert(n->name);
    });
    return names;
}

} // namespace detail

/// Gives every constant occurrence its own fresh variable so its precision
/// becomes tunable. Bindings are hoisted to the top in evaluation order;
/// constants that already sit alone in a user binding keep that binding.
inline FunctionSpec extract_constants(const FunctionSpec& f) {
    std::set<std::string> used = detail::all_names(f);
    std::vector<std::pair<std::string, Rational>> consts;
    int counter = 0;
    auto fresh = [&]() {
        std::string name = "_const" + std::to_string(counter++);
        while (used.count(name)) name = "_const" + std::to_string(counter++);
        used.insert(name);
        return name;
    };

    std::function<ExprPtr(const ExprPtr&, bool)> walk = [&](const ExprPtr& e,
                                                            bool is_binding_root) -> ExprPtr {
        switch (e->kind) {
            case ExprKind::Var: return e;
            case ExprKind::Const: {
                if (is_binding_root) return e; // already owns a variable
                std::string name = fresh();
                consts.emplace_back(name, e->value);
                return make_var(name, e->loc);
            }
            case ExprKind::Neg:
            case ExprKind::Sqrt: return make_unary(e->kind, walk(e->a, false), e->loc);
            case ExprKind::Let:
                return make_let(e->name, walk(e->a, true), walk(e->b, false), e->loc);
            default:
                return make_binary(e->kind, walk(e->a, false), walk(e->b, false), e->loc);
        }
    };

    FunctionSpec out = f;
    ExprPtr body = walk(f.body, false);
    for (auto it = consts.rbegin(); it != consts.rend(); ++it)
        body = make_let(it->first, make_const(it->second), body);
    out.body = body;
    return out;
}

/// Lowers the body to a chain of bindings, each holding exactly one
/// arithmetic operation over variables, ending in a variable reference.
/// Fresh temporaries follow the left-to-right post-order of the tree; user
/// bindings that already hold a single operation keep their names.
inline FunctionSpec to_three_address(const FunctionSpec& f) {
    std::set<std::string> used = detail::all_names(f);
    std::vector<std::pair<std::string, ExprPtr>> bindings;
    std::map<std::string, std::string> alias;
    int temp_counter = 0;
    int const_counter = 0;

    auto fresh = [&](const char* base, int& counter) {
        std::string name = base + std::to_string(counter++);
        while (used.count(name)) name = base + std::to_string(counter++);
        used.insert(name);
        return name;
    };

    // returns the variable holding the value of e
    std::function<ExprPtr(const ExprPtr&, const std::string*)> flatten =
        [&](const ExprPtr& e, const std::string* bind_as) -> ExprPtr {
        switch (e->kind) {
            case ExprKind::Var: {
                auto it = alias.find(e->name);
                ExprPtr v = it != alias.end() ? make_var(it->second, e->loc) : e;
                if (bind_as) { // val x = y degenerates to an alias
                    alias[*bind_as] = v->name;
                }
                return v;
            }
            case ExprKind::Const: {
                std::string name = bind_as ? *bind_as : fresh("_const", const_counter);
                bindings.emplace_back(name, e);
                return make_var(name, e->loc);
            }
            case ExprKind::Neg:
            case ExprKind::Sqrt: {
                ExprPtr a = flatten(e->a, nullptr);
                std::string name = bind_as ? *bind_as : fresh("_t", temp_counter);
                bindings.emplace_back(name, make_unary(e->kind, a, e->loc));
                return make_var(name, e->loc);
            }
            case ExprKind::Let: {
                flatten(e->a, &e->name);
                return flatten(e->b, bind_as);
            }
            default: {
                ExprPtr a = flatten(e->a, nullptr);
                ExprPtr b = flatten(e->b, nullptr);
                std::string name = bind_as ? *bind_as : fresh("_t", temp_counter);
                bindings.emplace_back(name, make_binary(e->kind, a, b, e->loc));
                return make_var(name, e->loc);
            }
        }
    };

    FunctionSpec out = f;
    ExprPtr result = flatten(f.body, nullptr);
    ExprPtr body = result;
    for (auto it = bindings.rbegin(); it != bindings.rend(); ++it)
        body = make_let(it->first, it->second, body);
    out.body = body;
    return out;
}

/// The list delta-debugging operates on, sorted by order of appearance in
/// the program: parameters first, then bindings in chain order. With
/// `coarse` only declared variables (parameters and user bindings) remain.
inline std::vector<std::string> tunable_variables(const FunctionSpec& f) {
    std::vector<std::string> vars = f.params;
    ExprPtr body = f.body;
    while (body->kind == ExprKind::Let) {
        vars.push_back(body->name);
        body = body->b;
    }
    return vars;
}

} // namespace mixprec
