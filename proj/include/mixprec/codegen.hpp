#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mixprec/analysis.hpp"
#include "mixprec/parser.hpp"

namespace mixprec {

enum class CodegenTarget { C, Scala };

/// Explicitly typed expression: every precision change is a Cast node, so a
/// checking pass can prove there are no implicit conversions left.
struct TypedExpr;
using TypedExprPtr = std::shared_ptr<const TypedExpr>;

struct TypedExpr {
    enum class Kind { Var, Const, Op, Cast };
    Kind kind;
    Precision prec;
    std::string name;                // Var
    Rational value;                  // Const
    OpKind op{};                     // Op
    std::vector<TypedExprPtr> args;  // Op operands / Cast operand
    std::optional<FixedFormat> fmt;  // fixed family
};

struct TypedBinding {
    std::string name;
    Precision prec;
    std::optional<FixedFormat> fmt;
    TypedExprPtr rhs;
};

struct TypedProgram {
    std::string name;
    std::vector<std::string> params;
    std::map<std::string, Precision> param_prec;
    std::map<std::string, FixedFormat> param_fmt; // fixed family
    std::vector<TypedBinding> bindings;
    TypedExprPtr result;
    Precision result_prec;
    bool fixed = false;
};

namespace detail {

inline TypedExprPtr typed_var(std::string n, Precision p, std::optional<FixedFormat> fmt = {}) {
    return std::make_shared<TypedExpr>(
        TypedExpr{TypedExpr::Kind::Var, p, std::move(n), {}, {}, {}, fmt});
}
inline TypedExprPtr typed_const(Rational v, Precision p, std::optional<FixedFormat> fmt = {}) {
    return std::make_shared<TypedExpr>(
        TypedExpr{TypedExpr::Kind::Const, p, {}, std::move(v), {}, {}, fmt});
}
inline TypedExprPtr typed_cast(TypedExprPtr e, Precision p, std::optional<FixedFormat> fmt = {}) {
    return std::make_shared<TypedExpr>(
        TypedExpr{TypedExpr::Kind::Cast, p, {}, {}, {}, {std::move(e)}, fmt});
}
inline TypedExprPtr typed_op(OpKind op, Precision p, std::vector<TypedExprPtr> args,
                             std::optional<FixedFormat> fmt = {}) {
    return std::make_shared<TypedExpr>(
        TypedExpr{TypedExpr::Kind::Op, p, {}, {}, op, std::move(args), fmt});
}

/// Precision assignment used by float code generation: operations run in
/// the widest precision among their operands, lifted further when the result
/// lands in a wider variable. Mirrors the error analysis rule.
class TypedBuilder {
public:
    TypedBuilder(const FunctionSpec& f, const TypeConfig& config, const ErrorAnalysis* ea)
        : f_(f), config_(config), ea_(ea) {
        fixed_ = !config.is_float_config();
        if (fixed_ && !ea_) throw Error("fixed-point code generation needs the error analysis");
        default_prec_ = config.assignment.empty() ? Precision::Float64 : config.top_precision();
    }

    TypedProgram run() {
        TypedProgram prog;
        prog.name = f_.name;
        prog.params = f_.params;
        prog.fixed = fixed_;
        std::map<std::string, Precision> env;
        for (const auto& p : f_.params) {
            env[p] = config_.at(p);
            prog.param_prec[p] = config_.at(p);
            if (fixed_) prog.param_fmt[p] = ea_->var_format.at(p);
        }
        ExprPtr body = f_.body;
        while (body->kind == ExprKind::Let) {
            Precision target = config_.contains(body->name) ? config_.at(body->name)
                                                            : default_prec_;
            TypedExprPtr rhs = build(body->a, env, target);
            std::optional<FixedFormat> vfmt;
            if (fixed_) vfmt = ea_->var_format.at(body->name);
            if (rhs->prec != target) rhs = typed_cast(rhs, target, vfmt);
            else if (fixed_ && rhs->fmt != vfmt) rhs = typed_cast(rhs, target, vfmt);
            prog.bindings.push_back({body->name, target, vfmt, rhs});
            env[body->name] = target;
            body = body->b;
        }
        prog.result = build(body, env, std::nullopt);
        prog.result_prec = prog.result->prec;
        return prog;
    }

private:
    std::optional<FixedFormat> node_fmt(const ExprPtr& e) const {
        if (!fixed_) return std::nullopt;
        auto it = ea_->node_format.find(e.get());
        if (it == ea_->node_format.end()) throw Error("missing fixed format in code generation");
        return it->second;
    }

    TypedExprPtr build(const ExprPtr& e, std::map<std::string, Precision>& env,
                       std::optional<Precision> target) {
        switch (e->kind) {
            case ExprKind::Var: {
                auto it = env.find(e->name);
                if (it == env.end()) throw Error("unbound variable '" + e->name + "'");
                std::optional<FixedFormat> fmt;
                if (fixed_) fmt = ea_->var_format.at(e->name);
                return typed_var(e->name, it->second, fmt);
            }
            case ExprKind::Const:
                return typed_const(e->value, target.value_or(default_prec_), node_fmt(e));
            case ExprKind::Let:
                throw Error("nested let in code generation");
            default: break;
        }
        TypedExprPtr a = build_operand(e->a, env);
        TypedExprPtr b = e->b ? build_operand(e->b, env) : nullptr;

        std::optional<Precision> pi = target;
        for (const TypedExprPtr* s : {&a, &b}) {
            if (!*s) continue;
            if ((*s)->kind == TypedExpr::Kind::Const) continue; // adopts the op precision
            pi = pi ? max_precision(*pi, (*s)->prec) : (*s)->prec;
        }
        Precision prec = pi.value_or(default_prec_);

        std::vector<TypedExprPtr> args;
        for (TypedExprPtr s : {a, b}) {
            if (!s) continue;
            if (s->kind == TypedExpr::Kind::Const) {
                // literal materializes directly at the operation precision
                std::optional<FixedFormat> f = s->fmt;
                args.push_back(typed_const(s->value, prec, f));
            } else if (!fixed_ && s->prec != prec) {
                args.push_back(typed_cast(s, prec));
            } else {
                args.push_back(s); // fixed operands align inside the op emission
            }
        }
        return typed_op(to_op_kind(e->kind), prec, std::move(args), node_fmt(e));
    }

    TypedExprPtr build_operand(const ExprPtr& e, std::map<std::string, Precision>& env) {
        return build(e, env, std::nullopt);
    }

    const FunctionSpec& f_;
    const TypeConfig& config_;
    const ErrorAnalysis* ea_;
    bool fixed_ = false;
    Precision default_prec_ = Precision::Float64;
};

} // namespace detail

inline TypedProgram build_typed_program(const FunctionSpec& f, const TypeConfig& config,
                                        const ErrorAnalysis* ea = nullptr) {
    return detail::TypedBuilder(f, config, ea).run();
}

/// Rejects any implicit precision change left in the typed program: all
/// operands of an operation carry the operation's precision (floats), every
/// cast actually changes precision or format, and binding right-hand sides
/// match their variable.
inline void check_casts(const TypedProgram& prog) {
    std::function<void(const TypedExprPtr&)> walk = [&](const TypedExprPtr& e) {
        switch (e->kind) {
            case TypedExpr::Kind::Var:
            case TypedExpr::Kind::Const: return;
            case TypedExpr::Kind::Cast: {
                const TypedExprPtr& in = e->args[0];
                walk(in);
                if (in->prec == e->prec && !(prog.fixed && in->fmt != e->fmt))
                    throw Error("cast without a precision or format change");
                return;
            }
            case TypedExpr::Kind::Op: {
                for (const TypedExprPtr& arg : e->args) {
                    walk(arg);
                    if (!prog.fixed && arg->prec != e->prec)
                        throw Error("implicit precision change on an operand");
                }
                return;
            }
        }
    };
    for (const TypedBinding& b : prog.bindings) {
        walk(b.rhs);
        if (b.rhs->prec != b.prec) throw Error("implicit precision change in an assignment");
        if (prog.fixed && b.rhs->fmt != b.fmt) throw Error("implicit format change in an assignment");
    }
    walk(prog.result);
}

namespace detail {

inline std::string c_type(Precision p) {
    switch (p) {
        case Precision::Float32: return "float";
        case Precision::Float64: return "double";
        case Precision::Float128: return "__float128";
        case Precision::Fixed16: return "int16_t";
        case Precision::Fixed32: return "int32_t";
    }
    return "?";
}

inline std::string scala_type(Precision p) {
    switch (p) {
        case Precision::Float32: return "Float";
        case Precision::Float64: return "Double";
        case Precision::Float128: return "Quad";
        default: return "?";
    }
}

inline std::string c_literal(const Rational& v, Precision p) {
    std::string s = exact_decimal_string(v);
    switch (p) {
        case Precision::Float32: return s + "f";
        case Precision::Float64: return s;
        case Precision::Float128: return s + "Q";
        default: throw Error("fixed literals are emitted as scaled integers");
    }
}

inline std::string scala_literal(const Rational& v, Precision p) {
    std::string s = exact_decimal_string(v);
    switch (p) {
        case Precision::Float32: return s + "f";
        case Precision::Float64: return s;
        case Precision::Float128: return "Quad(" + s + ")";
        default: throw Error("fixed literals are emitted as scaled integers");
    }
}

inline std::string c_sqrt_fn(Precision p) {
    switch (p) {
        case Precision::Float32: return "sqrtf";
        case Precision::Float64: return "sqrt";
        case Precision::Float128: return "sqrtq";
        default: throw Error("no float sqrt for fixed precision");
    }
}

inline void scan_features(const TypedExprPtr& e, bool& has_sqrt, bool& has_quad,
                          bool& has_div32) {
    if (e->prec == Precision::Float128) has_quad = true;
    if (e->kind == TypedExpr::Kind::Op) {
        if (e->op == OpKind::Sqrt) has_sqrt = true;
        if (e->op == OpKind::Div && e->prec == Precision::Fixed32) has_div32 = true;
    }
    for (const TypedExprPtr& a : e->args) scan_features(a, has_sqrt, has_quad, has_div32);
}

inline std::string emit_float_expr_c(const TypedExprPtr& e) {
    switch (e->kind) {
        case TypedExpr::Kind::Var: return e->name;
        case TypedExpr::Kind::Const: return c_literal(e->value, e->prec);
        case TypedExpr::Kind::Cast:
            return "(" + c_type(e->prec) + ")(" + emit_float_expr_c(e->args[0]) + ")";
        case TypedExpr::Kind::Op: {
            if (e->op == OpKind::Sqrt)
                return c_sqrt_fn(e->prec) + "(" + emit_float_expr_c(e->args[0]) + ")";
            if (e->op == OpKind::Neg) return "-(" + emit_float_expr_c(e->args[0]) + ")";
            const char* sym = e->op == OpKind::Add   ? " + "
                              : e->op == OpKind::Sub ? " - "
                              : e->op == OpKind::Mul ? " * "
                                                     : " / ";
            return "(" + emit_float_expr_c(e->args[0]) + sym + emit_float_expr_c(e->args[1]) + ")";
        }
    }
    return "";
}

inline std::string emit_float_expr_scala(const TypedExprPtr& e) {
    switch (e->kind) {
        case TypedExpr::Kind::Var: return e->name;
        case TypedExpr::Kind::Const: return scala_literal(e->value, e->prec);
        case TypedExpr::Kind::Cast: {
            std::string meth = e->prec == Precision::Float32   ? ".toFloat"
                               : e->prec == Precision::Float64 ? ".toDouble"
                                                               : ".toQuad";
            return "(" + emit_float_expr_scala(e->args[0]) + ")" + meth;
        }
        case TypedExpr::Kind::Op: {
            if (e->op == OpKind::Sqrt) return "sqrt(" + emit_float_expr_scala(e->args[0]) + ")";
            if (e->op == OpKind::Neg) return "-(" + emit_float_expr_scala(e->args[0]) + ")";
            const char* sym = e->op == OpKind::Add   ? " + "
                              : e->op == OpKind::Sub ? " - "
                              : e->op == OpKind::Mul ? " * "
                                                     : " / ";
            return "(" + emit_float_expr_scala(e->args[0]) + sym +
                   emit_float_expr_scala(e->args[1]) + ")";
        }
    }
    return "";
}

} // namespace detail

/// Self-contained C (or Scala-flavoured) source for a float configuration,
/// one statement per binding, every cast explicit.
inline std::string emit_float(const FunctionSpec& f, const TypeConfig& config,
                              CodegenTarget target) {
    if (!config.is_float_config()) throw Error("emit_float needs a float configuration");
    TypedProgram prog = build_typed_program(f, config);
    check_casts(prog);

    bool has_sqrt = false, has_quad = false, has_div32 = false;
    for (const TypedBinding& b : prog.bindings)
        detail::scan_features(b.rhs, has_sqrt, has_quad, has_div32);
    detail::scan_features(prog.result, has_sqrt, has_quad, has_div32);
    for (const auto& [p, pr] : prog.param_prec)
        if (pr == Precision::Float128) has_quad = true;
    if (prog.result_prec == Precision::Float128) has_quad = true;

    std::string out;
    if (target == CodegenTarget::C) {
        if (has_sqrt) out += "#include <math.h>\n";
        if (has_quad && has_sqrt) out += "#include <quadmath.h>\n";
        if (!out.empty()) out += "\n";
        out += detail::c_type(prog.result_prec) + " " + prog.name + "(";
        for (size_t i = 0; i < prog.params.size(); ++i) {
            if (i) out += ", ";
            out += detail::c_type(prog.param_prec.at(prog.params[i])) + " " + prog.params[i];
        }
        out += ") {\n";
        for (const TypedBinding& b : prog.bindings) {
            out += "    const " + detail::c_type(b.prec) + " " + b.name + " = " +
                   detail::emit_float_expr_c(b.rhs) + ";\n";
        }
        out += "    return " + detail::emit_float_expr_c(prog.result) + ";\n}\n";
        return out;
    }
    out += "def " + prog.name + "(";
    for (size_t i = 0; i < prog.params.size(); ++i) {
        if (i) out += ", ";
        out += prog.params[i] + ": " + detail::scala_type(prog.param_prec.at(prog.params[i]));
    }
    out += "): " + detail::scala_type(prog.result_prec) + " = {\n";
    for (const TypedBinding& b : prog.bindings) {
        out += "  val " + b.name + ": " + detail::scala_type(b.prec) + " = " +
               detail::emit_float_expr_scala(b.rhs) + "\n";
    }
    out += "  " + detail::emit_float_expr_scala(prog.result) + "\n}\n";
    return out;
}

namespace detail {

struct FixedEmitter {
    const TypedProgram& prog;
    bool need_sqrt64 = false;
    bool need_sqrt128 = false;

    static std::string shifted(std::string expr, int amount) {
        if (amount > 0) return "(" + expr + " << " + std::to_string(amount) + ")";
        if (amount < 0) return "(" + expr + " >> " + std::to_string(-amount) + ")";
        return expr;
    }

    // value expression carrying fraction bits `fmt.fractional_bits` in the
    // wide accumulator type
    std::string wide(const TypedExprPtr& e, const char* acc) {
        switch (e->kind) {
            case TypedExpr::Kind::Var: return "(" + std::string(acc) + ")" + e->name;
            case TypedExpr::Kind::Const: {
                BigInt scaled = floor_rat(e->value * pow2(e->fmt->fractional_bits));
                return "(" + std::string(acc) + ")" + scaled.str() +
                       " /* " + exact_decimal_string(e->value) + " in " + e->fmt->to_string() +
                       " */";
            }
            case TypedExpr::Kind::Cast: {
                int d = e->fmt->fractional_bits - e->args[0]->fmt->fractional_bits;
                return shifted(wide(e->args[0], acc), d);
            }
            case TypedExpr::Kind::Op: break;
        }
        int fr = e->fmt->fractional_bits;
        if (e->op == OpKind::Neg) {
            int d = fr - e->args[0]->fmt->fractional_bits;
            return shifted("(-" + wide(e->args[0], acc) + ")", d);
        }
        if (e->op == OpKind::Sqrt) {
            int k = 2 * fr - e->args[0]->fmt->fractional_bits;
            if (k < 0) throw Error("fixed sqrt shift underflow");
            bool wide128 = std::string(acc) == "__int128";
            (wide128 ? need_sqrt128 : need_sqrt64) = true;
            return std::string(wide128 ? "fx_sqrt128" : "fx_sqrt64") + "(" +
                   shifted(wide(e->args[0], acc), k) + ")";
        }
        const TypedExprPtr& a = e->args[0];
        const TypedExprPtr& b = e->args[1];
        int fa = a->fmt->fractional_bits, fb = b->fmt->fractional_bits;
        switch (e->op) {
            case OpKind::Add:
            case OpKind::Sub: {
                int fc = fa > fb ? fa : fb;
                std::string sum = "(" + shifted(wide(a, acc), fc - fa) +
                                  (e->op == OpKind::Add ? " + " : " - ") +
                                  shifted(wide(b, acc), fc - fb) + ")";
                return shifted(sum, fr - fc);
            }
            case OpKind::Mul:
                return shifted("(" + wide(a, acc) + " * " + wide(b, acc) + ")", fr - fa - fb);
            case OpKind::Div: {
                int k = fr - fa + fb;
                std::string num = shifted(wide(a, acc), k > 0 ? k : 0);
                std::string den = shifted(wide(b, acc), k < 0 ? -k : 0);
                return "(" + num + " / " + den + ")";
            }
            default: throw Error("unexpected fixed op");
        }
    }
};

} // namespace detail

/// Self-contained fixed-point C: 16/32-bit signed words, alignment by bit
/// shifts, truncation as the rounding mode (arithmetic right shifts round
/// toward minus infinity, within the certified truncation bound). Each
/// variable's comment records its sign+integer+fraction layout.
inline std::string emit_fixed(const FunctionSpec& f, const TypeConfig& config,
                              const RangeMap& ranges, CodegenTarget target) {
    if (target != CodegenTarget::C) throw Error("fixed-point output is C only");
    if (config.is_float_config()) throw Error("emit_fixed needs a fixed configuration");
    ErrorAnalysis ea = roundoff_error(f, ranges, config);
    TypedProgram prog = build_typed_program(f, config, &ea);
    check_casts(prog);

    // wide accumulator: 64-bit covers the 16-bit word; 32-bit division and
    // square roots can need up to ~96 bits of shifted dividend
    bool any32 = false;
    for (const auto& [v, p] : config.assignment) any32 |= p == Precision::Fixed32;
    const char* acc = any32 ? "__int128" : "int64_t";

    detail::FixedEmitter em{prog};
    std::string body;
    for (const TypedBinding& b : prog.bindings) {
        std::string rhs = em.wide(b.rhs, acc);
        body += "    const " + detail::c_type(b.prec) + " " + b.name + " = (" +
                detail::c_type(b.prec) + ")" + rhs + "; /* " + b.name + ": 1+" +
                std::to_string(b.fmt->integer_bits) + "+" + std::to_string(b.fmt->fractional_bits) +
                " */\n";
    }
    std::string result = em.wide(prog.result, acc);

    std::string out = "#include <stdint.h>\n\n";
    if (em.need_sqrt64) {
        out += "static inline int64_t fx_sqrt64(int64_t v) {\n"
               "    int64_t r = 0, bit = (int64_t)1 << 62;\n"
               "    while (bit > v) bit >>= 2;\n"
               "    while (bit != 0) {\n"
               "        if (v >= r + bit) { v -= r + bit; r = (r >> 1) + bit; }\n"
               "        else r >>= 1;\n"
               "        bit >>= 2;\n"
               "    }\n"
               "    return r;\n}\n\n";
    }
    if (em.need_sqrt128) {
        out += "static inline __int128 fx_sqrt128(__int128 v) {\n"
               "    __int128 r = 0, bit = (__int128)1 << 124;\n"
               "    while (bit > v) bit >>= 2;\n"
               "    while (bit != 0) {\n"
               "        if (v >= r + bit) { v -= r + bit; r = (r >> 1) + bit; }\n"
               "        else r >>= 1;\n"
               "        bit >>= 2;\n"
               "    }\n"
               "    return r;\n}\n\n";
    }
    out += "/* inputs arrive pre-quantized to the formats noted below */\n";
    out += detail::c_type(prog.result_prec) + " " + prog.name + "(";
    for (size_t i = 0; i < prog.params.size(); ++i) {
        if (i) out += ", ";
        const std::string& p = prog.params[i];
        const FixedFormat& fmt = prog.param_fmt.at(p);
        out += detail::c_type(prog.param_prec.at(p)) + " " + p + " /* " + p + ": 1+" +
               std::to_string(fmt.integer_bits) + "+" + std::to_string(fmt.fractional_bits) +
               " */";
    }
    out += ") {\n" + body;
    out += "    return (" + detail::c_type(prog.result_prec) + ")" + result + ";\n}\n";
    return out;
}

/// <function>_<ladder>_tuned.<ext>
inline std::string output_filename(const std::string& fn, const PrecisionLadder& ladder,
                                   CodegenTarget target) {
    std::string l;
    for (const Precision p : ladder.rungs) l += precision_name(p);
    return fn + "_" + l + "_tuned." + (target == CodegenTarget::C ? "c" : "scala");
}

} // namespace mixprec
