#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mixprec/affine.hpp"
#include "mixprec/expr.hpp"
#include "mixprec/interval.hpp"
#include "mixprec/parser.hpp"
#include "mixprec/precision.hpp"

namespace mixprec {

enum class RangeMethod { Interval, Affine, Plugin };

inline const char* range_method_name(RangeMethod m) {
    switch (m) {
        case RangeMethod::Interval: return "interval";
        case RangeMethod::Affine: return "affine";
        case RangeMethod::Plugin: return "plugin";
    }
    return "?";
}

/// Real-valued range of every subexpression occurrence, keyed by node
/// identity. Computed once per evaluation order; precisions never change
/// real ranges, so tuning shares one map across all its error queries.
struct RangeMap {
    std::unordered_map<const ExprNode*, Interval> ranges;
    RangeMethod method = RangeMethod::Interval;

    const Interval& at(const ExprNode* n) const {
        auto it = ranges.find(n);
        if (it == ranges.end()) throw Error("range map does not cover a node");
        return it->second;
    }
};

/// Hook for an external range refiner (an SMT-backed analysis would plug in
/// here). The returned interval is intersected with the sound bottom-up one.
using RangeRefiner = std::function<Interval(const ExprNode&, const Interval&)>;

inline RangeRefiner& range_plugin_slot() {
    static RangeRefiner slot;
    return slot;
}
inline void set_range_plugin(RangeRefiner r) { range_plugin_slot() = std::move(r); }

namespace detail {

inline Interval eval_range_interval(const ExprPtr& e, std::map<std::string, Interval>& env,
                                    RangeMap& out, const RangeRefiner* refiner) {
    Interval r;
    switch (e->kind) {
        case ExprKind::Var: {
            auto it = env.find(e->name);
            if (it == env.end()) throw Error("unbound variable '" + e->name + "' in range analysis");
            r = it->second;
            break;
        }
        case ExprKind::Const: r = Interval(e->value); break;
        case ExprKind::Let: {
            Interval bound = eval_range_interval(e->a, env, out, refiner);
            env[e->name] = bound;
            r = eval_range_interval(e->b, env, out, refiner);
            break;
        }
        default: {
            Interval a = eval_range_interval(e->a, env, out, refiner);
            if (is_unary_op(e->kind)) {
                r = interval_op(to_op_kind(e->kind), a);
            } else {
                Interval b = eval_range_interval(e->b, env, out, refiner);
                r = interval_op(to_op_kind(e->kind), a, &b);
            }
            break;
        }
    }
    if (refiner && *refiner) {
        Interval refined = (*refiner)(*e, r);
        auto meet = iintersect(r, refined);
        if (!meet) throw Error("range plugin returned a range disjoint from the sound one");
        r = *meet;
    }
    out.ranges[e.get()] = r;
    return r;
}

inline AffineForm eval_range_affine(const ExprPtr& e, std::map<std::string, AffineForm>& env,
                                    RangeMap& out, NoiseAllocator& alloc) {
    AffineForm r;
    switch (e->kind) {
        case ExprKind::Var: {
            auto it = env.find(e->name);
            if (it == env.end()) throw Error("unbound variable '" + e->name + "' in range analysis");
            r = it->second;
            break;
        }
        case ExprKind::Const: r = AffineForm::constant(e->value); break;
        case ExprKind::Let: {
            AffineForm bound = eval_range_affine(e->a, env, out, alloc);
            env[e->name] = bound;
            r = eval_range_affine(e->b, env, out, alloc);
            break;
        }
        default: {
            AffineForm a = eval_range_affine(e->a, env, out, alloc);
            if (is_unary_op(e->kind)) {
                r = affine_op(to_op_kind(e->kind), a, nullptr, alloc);
            } else {
                AffineForm b = eval_range_affine(e->b, env, out, alloc);
                r = affine_op(to_op_kind(e->kind), a, &b, alloc);
            }
            break;
        }
    }
    out.ranges[e.get()] = r.to_interval();
    return r;
}

} // namespace detail

/// Bottom-up real range analysis over the input box. Ranges abort the
/// optimization of a function with DivisionByZeroRange / NegativeSqrtRange.
inline RangeMap compute_ranges(const FunctionSpec& f, RangeMethod method = RangeMethod::Interval) {
    RangeMap out;
    out.method = method;
    switch (method) {
        case RangeMethod::Interval: {
            std::map<std::string, Interval> env(f.input_ranges.begin(), f.input_ranges.end());
            detail::eval_range_interval(f.body, env, out, nullptr);
            break;
        }
        case RangeMethod::Affine: {
            NoiseAllocator alloc;
            std::map<std::string, AffineForm> env;
            for (const auto& [name, iv] : f.input_ranges)
                env.emplace(name, AffineForm::from_interval(iv, alloc));
            detail::eval_range_affine(f.body, env, out, alloc);
            break;
        }
        case RangeMethod::Plugin: {
            if (!range_plugin_slot()) throw Error("range method 'plugin' needs a registered refiner");
            std::map<std::string, Interval> env(f.input_ranges.begin(), f.input_ranges.end());
            detail::eval_range_interval(f.body, env, out, &range_plugin_slot());
            break;
        }
    }
    return out;
}

/// Total assignment of a precision to every tunable variable.
struct TypeConfig {
    std::map<std::string, Precision> assignment;

    static TypeConfig uniform(const std::vector<std::string>& vars, Precision p) {
        TypeConfig c;
        for (const auto& v : vars) c.assignment.emplace(v, p);
        return c;
    }

    bool contains(const std::string& v) const { return assignment.count(v) != 0; }

    Precision at(const std::string& v) const {
        auto it = assignment.find(v);
        if (it == assignment.end()) throw Error("type configuration misses variable '" + v + "'");
        return it->second;
    }

    /// All precisions must live on one ladder.
    void validate() const {
        if (assignment.empty()) return;
        bool fl = is_float(assignment.begin()->second);
        for (const auto& [v, p] : assignment) {
            if (is_float(p) != fl)
                throw Error("type configuration mixes float and fixed precisions ('" + v + "')");
        }
    }

    bool is_float_config() const {
        return assignment.empty() || is_float(assignment.begin()->second);
    }

    /// Highest precision appearing anywhere in the assignment.
    Precision top_precision() const {
        if (assignment.empty()) throw Error("empty type configuration");
        Precision best = assignment.begin()->second;
        for (const auto& [v, p] : assignment) best = max_precision(best, p);
        return best;
    }

    bool operator==(const TypeConfig& o) const = default;
};

/// Qm.f interpretation of a fixed-point word: sign bit, `integer_bits` whole
/// bits, `fractional_bits` fraction bits.
struct FixedFormat {
    int total_bits = 0;
    int integer_bits = 0;
    int fractional_bits = 0;

    bool operator==(const FixedFormat&) const = default;

    std::string to_string() const {
        return "Q" + std::to_string(integer_bits) + "." + std::to_string(fractional_bits);
    }
};

/// Smallest format whose integer part covers the range. The fractional width
/// is whatever remains of the word; running out of it is an overflow.
inline FixedFormat fixed_format(const Interval& range, Precision p) {
    if (!is_fixed(p)) throw Error("fixed_format needs a fixed-point precision");
    Rational m = max_abs(range);
    int ibits = 0;
    if (!m.is_zero() && m >= 1) ibits = static_cast<int>(floor_log2_abs(m)) + 1;
    int total = total_bits(p);
    int fbits = total - 1 - ibits;
    if (fbits < 0)
        throw FormatOverflow("range " + range.to_string() + " needs " + std::to_string(ibits) +
                             " integer bits, too wide for " + precision_name(p));
    return FixedFormat{total, ibits, fbits};
}

/// Exact-rational worst-case roundoff bound plus the per-node typing data the
/// code generator and the simulator reuse.
struct ErrorAnalysis {
    Rational bound;
    Precision result_precision = Precision::Float64;
    std::unordered_map<const ExprNode*, Precision> op_precision;    // arithmetic nodes
    std::unordered_map<const ExprNode*, Precision> value_precision; // every node
    std::unordered_map<const ExprNode*, FixedFormat> node_format;   // fixed family
    std::map<std::string, FixedFormat> var_format;                  // fixed family
};

namespace detail {

struct ValState {
    Interval range;                 // real-valued range
    AffineForm err;                 // worst-case |x~ - x| as an affine form
    std::optional<Precision> prec;  // nullopt: a constant adopting its context
    std::optional<FixedFormat> fmt; // fixed family only
    // the finite value is zero or carries the sign of the real value; true
    // for rounded leaves and preserved by sign-stable operations
    bool sign_safe = false;
};

class ErrorEvaluator {
public:
    ErrorEvaluator(const FunctionSpec& f, const RangeMap& ranges, const TypeConfig& config,
                   ErrorAnalysis& out)
        : f_(f), ranges_(ranges), config_(config), out_(out) {
        config_.validate();
        // constant-only expressions may carry no variables at all; they
        // default to double like the rewriting fitness does
        fixed_ = !config_.is_float_config();
        default_prec_ = config_.assignment.empty() ? Precision::Float64 : config_.top_precision();
    }

    void run() {
        std::map<std::string, ValState> env;
        for (const std::string& p : f_.params) {
            if (!config_.contains(p)) throw Error("type configuration misses input '" + p + "'");
            env.emplace(p, input_state(p));
        }
        ValState res = eval(f_.body, env, std::nullopt);
        if (!res.prec) {
            // a bare constant result still has to be represented
            res.err = const_error(res.range.lo, default_prec_, f_.body);
            res.prec = default_prec_;
        }
        out_.bound = res.err.max_abs();
        out_.result_precision = *res.prec;
    }

private:
    Interval err_interval(const AffineForm& err) const { return err.to_interval(); }

    Interval widened(const Interval& range, const AffineForm& err) const {
        return iadd(range, err_interval(err));
    }

    /// Worst-case error of one rounding at precision p for values in `iv`:
    /// half an ulp of the binade holding the largest magnitude, with the
    /// denormal quantum as a floor when the interval reaches that band.
    Rational commit_float(const Interval& iv, Precision p) const {
        Rational m = max_abs(iv);
        if (m.is_zero()) return Rational(0);
        Rational c = machine_epsilon(p) * pow2(floor_log2_abs(m));
        if (min_abs(iv) < min_normal(p)) c = max(c, pow2(min_quantum_exp(p) - 1));
        return c;
    }

    /// NaN/infinity/denormal detection. Overflow is judged on the finite
    /// value's widened range; the denormal-only condition on the real range
    /// (the committed quantum would smear a genuinely denormal band across
    /// zero and hide it).
    void check_special(const Interval& real, const Interval& w, Precision p,
                       const ExprPtr& e) const {
        if (fixed_) return;
        if (max_abs(w) > max_finite(p))
            throw SpecialValueError("value range " + w.to_string() + " overflows " +
                                    precision_name(p) + node_loc(e));
        Rational mn = min_normal(p);
        bool inside = real.hi < mn && real.lo > -mn;
        bool excludes_zero = real.lo.sign() > 0 || real.hi.sign() < 0;
        if (inside && excludes_zero)
            throw SpecialValueError("value range " + real.to_string() +
                                    " contains only denormal numbers in " + precision_name(p) +
                                    node_loc(e));
    }

    static std::string node_loc(const ExprPtr& e) {
        if (e->loc.line == 0) return "";
        return " (line " + std::to_string(e->loc.line) + ":" + std::to_string(e->loc.col) + ")";
    }

    ValState input_state(const std::string& name) {
        ValState s;
        s.range = f_.input_ranges.at(name);
        s.sign_safe = true;
        s.prec = config_.at(name);
        if (fixed_) {
            FixedFormat fmt = fixed_format(s.range, *s.prec);
            s.fmt = fmt;
            s.err = AffineForm().with_fresh_term(pow2(-fmt.fractional_bits), alloc_);
            out_.var_format[name] = fmt;
        } else {
            s.err = AffineForm().with_fresh_term(commit_float(s.range, *s.prec), alloc_);
            check_special(s.range, widened(s.range, s.err), *s.prec, f_.body);
        }
        return s;
    }

    /// Representation error of a literal at precision p (0 when exact).
    AffineForm const_error(const Rational& v, Precision p, const ExprPtr& node) {
        if (fixed_) {
            FixedFormat fmt = fixed_format(Interval(v), p);
            out_.node_format[node.get()] = fmt;
            Rational scaled = v * pow2(fmt.fractional_bits);
            if (scaled.is_integer()) return AffineForm();
            return AffineForm().with_fresh_term(pow2(-fmt.fractional_bits), alloc_);
        }
        if (round_to_precision(v, significand_bits(p), min_quantum_exp(p)) == v) return AffineForm();
        return AffineForm().with_fresh_term(commit_float(Interval(v), p), alloc_);
    }

    ValState eval(const ExprPtr& e, std::map<std::string, ValState>& env,
                  std::optional<Precision> target) {
        switch (e->kind) {
            case ExprKind::Var: {
                auto it = env.find(e->name);
                if (it == env.end()) throw Error("unbound variable '" + e->name + "'");
                ValState s = it->second;
                out_.value_precision[e.get()] = s.prec.value_or(default_prec_);
                return s;
            }
            case ExprKind::Const: {
                ValState s;
                s.range = Interval(e->value);
                s.sign_safe = true;
                if (target) {
                    s.prec = *target;
                    s.err = const_error(e->value, *target, e);
                    if (fixed_) s.fmt = out_.node_format[e.get()];
                    else check_special(s.range, widened(s.range, s.err), *target, e);
                    out_.value_precision[e.get()] = *target;
                } else {
                    s.prec = std::nullopt; // adopts the consuming operation's precision
                }
                return s;
            }
            case ExprKind::Let: {
                ValState bound = eval(e->a, env, config_.contains(e->name)
                                                    ? std::optional<Precision>(config_.at(e->name))
                                                    : std::nullopt);
                if (config_.contains(e->name)) bound = store(bound, config_.at(e->name), e);
                if (fixed_ && bound.fmt) out_.var_format[e->name] = *bound.fmt;
                env[e->name] = bound;
                ValState r = eval(e->b, env, target);
                out_.value_precision[e.get()] = r.prec.value_or(default_prec_);
                return r;
            }
            default: return eval_op(e, env, target);
        }
    }

    /// Assignment semantics: storing into a strictly lower-precision variable
    /// commits one extra rounding at the target precision; widening is exact.
    ValState store(ValState s, Precision t, const ExprPtr& node) {
        Precision from = s.prec.value_or(default_prec_);
        if (ladder_rank(t) < ladder_rank(from)) {
            if (fixed_) {
                FixedFormat fmt = fixed_format(widened(s.range, s.err), t);
                s.err = s.err.with_fresh_term(pow2(-fmt.fractional_bits), alloc_);
                s.fmt = fmt;
            } else {
                Rational c = commit_float(widened(s.range, s.err), t);
                s.err = s.err.with_fresh_term(c, alloc_);
                check_special(s.range, widened(s.range, s.err), t, node);
            }
        } else if (fixed_ && ladder_rank(t) > ladder_rank(from) && s.fmt) {
            // wider word keeps the integer bits and gains fraction: exact
            FixedFormat fmt = fixed_format(widened(s.range, s.err), t);
            if (fmt.fractional_bits < s.fmt->fractional_bits)
                s.err = s.err.with_fresh_term(pow2(-fmt.fractional_bits), alloc_);
            s.fmt = fmt;
        }
        s.prec = t;
        return s;
    }

    ValState eval_op(const ExprPtr& e, std::map<std::string, ValState>& env,
                     std::optional<Precision> target) {
        OpKind op = to_op_kind(e->kind);
        ValState a = eval(e->a, env, std::nullopt);
        std::optional<ValState> b;
        if (is_binary_op(e->kind)) b = eval(e->b, env, std::nullopt);

        // operation precision: highest operand precision, lifted further by
        // the variable the result is assigned to
        std::optional<Precision> pi = target;
        for (const ValState* s : {&a, b ? &*b : nullptr}) {
            if (s && s->prec) pi = pi ? max_precision(*pi, *s->prec) : *s->prec;
        }
        Precision prec = pi.value_or(default_prec_);

        // a literal operand materializes at the operation's precision
        if (!a.prec) {
            a.err = const_error(e->a->value, prec, e->a);
            a.prec = prec;
            out_.value_precision[e->a.get()] = prec;
            if (fixed_) a.fmt = out_.node_format[e->a.get()];
        }
        if (b && !b->prec) {
            b->err = const_error(e->b->value, prec, e->b);
            b->prec = prec;
            out_.value_precision[e->b.get()] = prec;
            if (fixed_) b->fmt = out_.node_format[e->b.get()];
        }

        ValState r;
        r.range = ranges_.at(e.get());
        r.prec = prec;
        bool commits = true;

        switch (op) {
            case OpKind::Neg:
                r.err = -a.err;
                commits = false; // sign flip is exact
                r.sign_safe = a.sign_safe;
                if (fixed_) r.fmt = a.fmt;
                break;
            case OpKind::Add: r.err = a.err + b->err; break;
            case OpKind::Sub: r.err = a.err - b->err; break;
            case OpKind::Mul: {
                AffineForm ra = AffineForm::from_interval(a.range, alloc_);
                AffineForm rb = AffineForm::from_interval(b->range, alloc_);
                r.err = affine_mul(ra, b->err, alloc_) + affine_mul(rb, a.err, alloc_) +
                        affine_mul(a.err, b->err, alloc_);
                r.sign_safe = a.sign_safe && b->sign_safe;
                break;
            }
            case OpKind::Div:
                r.err = div_propagated(a, *b);
                r.sign_safe = a.sign_safe && b->sign_safe;
                break;
            case OpKind::Sqrt:
                r.err = sqrt_propagated(a, e);
                r.sign_safe = true; // rounded square roots are nonnegative
                break;
        }

        if (commits) {
            Interval before = widened(r.range, r.err);
            if (fixed_) {
                FixedFormat fmt = fixed_format(before, prec);
                r.fmt = fmt;
                r.err = r.err.with_fresh_term(pow2(-fmt.fractional_bits), alloc_);
            } else {
                r.err = r.err.with_fresh_term(commit_float(before, prec), alloc_);
            }
        }
        if (!fixed_) check_special(r.range, widened(r.range, r.err), prec, e);
        if (fixed_ && !r.fmt) r.fmt = fixed_format(widened(r.range, r.err), prec);
        if (fixed_) out_.node_format[e.get()] = *r.fmt;

        out_.op_precision[e.get()] = prec;
        out_.value_precision[e.get()] = prec;
        return r;
    }

    /// Division propagates through the reciprocal: the error of 1/b is
    /// bounded by |err_b| times the derivative 1/x^2 over the widened range
    /// of b, then multiplication propagation applies to a * (1/b).
    AffineForm div_propagated(const ValState& a, const ValState& b) {
        if (b.range.contains_zero()) throw DivisionByZeroRange();
        Interval b_wide = widened(b.range, b.err);
        if (b_wide.contains_zero())
            throw SpecialValueError("divisor range " + b.range.to_string() +
                                    " can reach zero under roundoff");
        Rational lo_abs = min_abs(b_wide), hi_abs = max_abs(b_wide);
        // d(1/x)/dx = -1/x^2 with |x| in [lo_abs, hi_abs]
        Interval deriv{-(lo_abs * lo_abs).reciprocal(), -(hi_abs * hi_abs).reciprocal()};
        AffineForm err_w = affine_mul(AffineForm::from_interval(deriv, alloc_), b.err, alloc_);
        Interval w_range = idiv(Interval(1), b.range);
        AffineForm ra = AffineForm::from_interval(a.range, alloc_);
        AffineForm rw = AffineForm::from_interval(w_range, alloc_);
        return affine_mul(ra, err_w, alloc_) + affine_mul(rw, a.err, alloc_) +
               affine_mul(a.err, err_w, alloc_);
    }

    AffineForm sqrt_propagated(const ValState& a, const ExprPtr& e) {
        if (a.range.lo.sign() < 0) throw NegativeSqrtRange();
        Interval wide = widened(a.range, a.err);
        if (wide.lo.sign() < 0) {
            // a sign-safe argument cannot turn negative in finite precision
            if (a.sign_safe) wide = Interval(Rational(0), wide.hi);
            else
                throw SpecialValueError("sqrt argument range " + a.range.to_string() +
                                        " can go negative under roundoff" + node_loc(e));
        }
        if (wide.lo.is_zero()) {
            // |sqrt(u) - sqrt(v)| <= sqrt(|u - v|)
            Rational bound = sqrt_enclosure(a.err.max_abs()).second;
            return AffineForm().with_fresh_term(bound, alloc_);
        }
        // derivative 1/(2 sqrt(x)) over the widened range, outward-rounded
        Rational dlo = (sqrt_enclosure(wide.hi).second * 2).reciprocal();
        Rational dhi = (sqrt_enclosure(wide.lo).first * 2).reciprocal();
        return affine_mul(AffineForm::from_interval({dlo, dhi}, alloc_), a.err, alloc_);
    }

    const FunctionSpec& f_;
    const RangeMap& ranges_;
    const TypeConfig& config_;
    ErrorAnalysis& out_;
    NoiseAllocator alloc_; // scoped to this analysis run
    bool fixed_ = false;
    Precision default_prec_ = Precision::Float64;
};

} // namespace detail

/// Sound worst-case absolute roundoff error of `f` under `config`, carrying
/// propagated subexpression errors as affine forms and committing one fresh
/// rounding per arithmetic operation, constant, input, and downcast.
inline ErrorAnalysis roundoff_error(const FunctionSpec& f, const RangeMap& ranges,
                                    const TypeConfig& config) {
    ErrorAnalysis out;
    detail::ErrorEvaluator(f, ranges, config, out).run();
    return out;
}

/// True iff the analysis succeeds and meets the function's target error.
/// Analysis failures map to false; the diagnostic records why.
inline bool check_bound(const FunctionSpec& f, const TypeConfig& config, const RangeMap& ranges,
                        std::string* diagnostic = nullptr) {
    if (!f.target_error) throw Error("function '" + f.name + "' has no target error");
    try {
        ErrorAnalysis ea = roundoff_error(f, ranges, config);
        if (diagnostic) *diagnostic = "bound " + ea.bound.to_string();
        return ea.bound <= *f.target_error;
    } catch (const Error& err) {
        if (diagnostic) *diagnostic = err.what();
        return false;
    }
}

} // namespace mixprec
