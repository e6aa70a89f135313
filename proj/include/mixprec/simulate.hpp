#pragma once

// Bit-accurate finite-precision evaluation, used as the oracle that checks
// certified error bounds against actual rounded computations. The float
// simulator rounds exact rational intermediates to the operation precision
// (IEEE round-to-nearest-even, gradual underflow); an equivalent native
// float/double fast path covers configurations without quad. The fixed-point
// simulator mirrors the generated integer code shift for shift.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "mixprec/analysis.hpp"
#include "mixprec/expr.hpp"
#include "mixprec/parser.hpp"

namespace mixprec {

/// Exact real evaluation at a point. Square roots make the result
/// irrational, so the value comes back as a (very tight) rational enclosure;
/// everything else stays a point interval.
inline Interval eval_exact(const ExprPtr& e, std::map<std::string, Interval>& env,
                           long sqrt_tol_bits = 200) {
    switch (e->kind) {
        case ExprKind::Var: {
            auto it = env.find(e->name);
            if (it == env.end()) throw Error("unbound variable '" + e->name + "'");
            return it->second;
        }
        case ExprKind::Const: return Interval(e->value);
        case ExprKind::Let: {
            Interval bound = eval_exact(e->a, env, sqrt_tol_bits);
            env[e->name] = bound;
            return eval_exact(e->b, env, sqrt_tol_bits);
        }
        case ExprKind::Sqrt: return isqrt(eval_exact(e->a, env, sqrt_tol_bits), sqrt_tol_bits);
        case ExprKind::Neg: return ineg(eval_exact(e->a, env, sqrt_tol_bits));
        default: {
            Interval a = eval_exact(e->a, env, sqrt_tol_bits);
            Interval b = eval_exact(e->b, env, sqrt_tol_bits);
            return interval_op(to_op_kind(e->kind), a, &b);
        }
    }
}

inline Interval eval_exact(const FunctionSpec& f, const std::map<std::string, Rational>& point,
                           long sqrt_tol_bits = 200) {
    std::map<std::string, Interval> env;
    for (const auto& [k, v] : point) env.emplace(k, Interval(v));
    return eval_exact(f.body, env, sqrt_tol_bits);
}

namespace detail {

/// Correctly rounded sqrt of an exact rational at `sig_bits`. Starts from an
/// enclosure and tightens until both ends round identically; exact squares
/// short-circuit so ties are still honest.
inline Rational round_sqrt(const Rational& v, int sig_bits, long min_qexp) {
    if (v.is_zero()) return Rational(0);
    if (v.sign() < 0) throw NegativeSqrtRange("sqrt of a negative value in simulation");
    BigInt num = v.numerator(), den = v.denominator();
    BigInt sn = boost::multiprecision::sqrt(num), sd = boost::multiprecision::sqrt(den);
    if (sn * sn == num && sd * sd == den)
        return round_to_precision(Rational(sn, sd), sig_bits, min_qexp);
    for (long tol = 3 * sig_bits;; tol *= 2) {
        auto [lo, hi] = sqrt_enclosure(v, tol);
        Rational rl = round_to_precision(lo, sig_bits, min_qexp);
        Rational rh = round_to_precision(hi, sig_bits, min_qexp);
        if (rl == rh) return rl;
        if (tol > 1000000) throw Error("sqrt rounding failed to converge");
    }
}

class FloatExactSim {
public:
    FloatExactSim(const FunctionSpec& f, const TypeConfig& config) : f_(f), config_(config) {
        default_prec_ = config.top_precision();
    }

    Rational run(const std::map<std::string, Rational>& point) {
        std::map<std::string, Val> env;
        for (const std::string& p : f_.params)
            env.emplace(p, Val{round_at(point.at(p), config_.at(p)), config_.at(p)});
        return eval(f_.body, env, std::nullopt).value;
    }

private:
    struct Val {
        Rational value;
        std::optional<Precision> prec; // nullopt: literal awaiting its context
    };

    static Rational round_at(const Rational& v, Precision p) {
        return round_to_precision(v, significand_bits(p), min_quantum_exp(p));
    }

    Val eval(const ExprPtr& e, std::map<std::string, Val>& env, std::optional<Precision> target) {
        switch (e->kind) {
            case ExprKind::Var: return env.at(e->name);
            case ExprKind::Const:
                if (target) return {round_at(e->value, *target), *target};
                return {e->value, std::nullopt};
            case ExprKind::Let: {
                Val bound = eval(e->a, env, config_.contains(e->name)
                                                ? std::optional<Precision>(config_.at(e->name))
                                                : std::nullopt);
                if (config_.contains(e->name)) bound = store(bound, config_.at(e->name));
                env[e->name] = bound;
                return eval(e->b, env, target);
            }
            default: break;
        }
        Val a = eval(e->a, env, std::nullopt);
        std::optional<Val> b;
        if (is_binary_op(e->kind)) b = eval(e->b, env, std::nullopt);

        std::optional<Precision> pi = target;
        for (const Val* s : {&a, b ? &*b : nullptr})
            if (s && s->prec) pi = pi ? max_precision(*pi, *s->prec) : *s->prec;
        Precision prec = pi.value_or(default_prec_);
        if (!a.prec) a = {round_at(a.value, prec), prec};
        if (b && !b->prec) b = Val{round_at(b->value, prec), prec};

        int sig = significand_bits(prec);
        long mq = min_quantum_exp(prec);
        switch (e->kind) {
            case ExprKind::Neg: return {-a.value, prec}; // exact
            case ExprKind::Sqrt: return {round_sqrt(a.value, sig, mq), prec};
            case ExprKind::Add: return {round_to_precision(a.value + b->value, sig, mq), prec};
            case ExprKind::Sub: return {round_to_precision(a.value - b->value, sig, mq), prec};
            case ExprKind::Mul: return {round_to_precision(a.value * b->value, sig, mq), prec};
            case ExprKind::Div:
                if (b->value.is_zero()) throw Error("division by zero in simulation");
                return {round_to_precision(a.value / b->value, sig, mq), prec};
            default: throw Error("unexpected node in simulation");
        }
    }

    Val store(Val v, Precision t) {
        Precision from = v.prec.value_or(default_prec_);
        if (ladder_rank(t) < ladder_rank(from)) v.value = round_at(v.value, t);
        v.prec = t;
        return v;
    }

    const FunctionSpec& f_;
    const TypeConfig& config_;
    Precision default_prec_;
};

/// Hardware float/double evaluation; valid when no Float128 appears. The
/// value invariant: a Float32-precision value is stored in the double
/// exactly, so every operation below performs exactly one IEEE rounding.
class FloatNativeSim {
public:
    FloatNativeSim(const FunctionSpec& f, const TypeConfig& config) : f_(f), config_(config) {
        default_prec_ = config.top_precision();
    }

    Rational run(const std::map<std::string, Rational>& point) {
        std::map<std::string, Val> env;
        for (const std::string& p : f_.params) {
            Precision pr = config_.at(p);
            // round the exact rational once at the input precision; the
            // conversion of the already-rounded value to double is exact
            Rational q = round_to_precision(point.at(p), significand_bits(pr), min_quantum_exp(pr));
            env.emplace(p, Val{q.to_double(), pr});
        }
        double r = eval(f_.body, env, std::nullopt).value;
        return rational_of(r);
    }

    static Rational rational_of(double d) {
        if (d == 0.0) return Rational(0);
        int exp = 0;
        double m = std::frexp(d, &exp);
        long long mant = static_cast<long long>(std::ldexp(m, 53));
        return Rational(BigInt(mant)) * pow2(exp - 53);
    }

private:
    struct Val {
        double value;
        std::optional<Precision> prec;
    };

    Val eval(const ExprPtr& e, std::map<std::string, Val>& env, std::optional<Precision> target) {
        switch (e->kind) {
            case ExprKind::Var: return env.at(e->name);
            case ExprKind::Const:
                if (target) return {materialize_const(e->value, *target), *target};
                return {0.0, std::nullopt}; // value substituted at the consuming op
            case ExprKind::Let: {
                Val bound = eval(e->a, env, config_.contains(e->name)
                                                ? std::optional<Precision>(config_.at(e->name))
                                                : std::nullopt);
                if (config_.contains(e->name)) bound = store(bound, config_.at(e->name));
                env[e->name] = bound;
                return eval(e->b, env, target);
            }
            default: break;
        }
        Val a = eval(e->a, env, std::nullopt);
        std::optional<Val> b;
        if (is_binary_op(e->kind)) b = eval(e->b, env, std::nullopt);

        std::optional<Precision> pi = target;
        for (const Val* s : {&a, b ? &*b : nullptr})
            if (s && s->prec) pi = pi ? max_precision(*pi, *s->prec) : *s->prec;
        Precision prec = pi.value_or(default_prec_);
        if (!a.prec) a = {materialize_const(e->a->value, prec), prec};
        if (b && !b->prec) b = Val{materialize_const(e->b->value, prec), prec};

        if (prec == Precision::Float32) {
            float x = static_cast<float>(a.value); // exact: value is F32
            float y = b ? static_cast<float>(b->value) : 0.0f;
            float r = 0.0f;
            switch (e->kind) {
                case ExprKind::Neg: r = -x; break;
                case ExprKind::Sqrt: r = std::sqrt(x); break;
                case ExprKind::Add: r = x + y; break;
                case ExprKind::Sub: r = x - y; break;
                case ExprKind::Mul: r = x * y; break;
                case ExprKind::Div: r = x / y; break;
                default: throw Error("unexpected node");
            }
            return {static_cast<double>(r), prec};
        }
        double x = a.value, y = b ? b->value : 0.0;
        double r = 0.0;
        switch (e->kind) {
            case ExprKind::Neg: r = -x; break;
            case ExprKind::Sqrt: r = std::sqrt(x); break;
            case ExprKind::Add: r = x + y; break;
            case ExprKind::Sub: r = x - y; break;
            case ExprKind::Mul: r = x * y; break;
            case ExprKind::Div: r = x / y; break;
            default: throw Error("unexpected node");
        }
        return {r, prec};
    }

    static double materialize_const(const Rational& v, Precision p) {
        Rational q = round_to_precision(v, significand_bits(p), min_quantum_exp(p));
        return q.to_double(); // exact: q is representable at p <= double
    }

    Val store(Val v, Precision t) {
        Precision from = v.prec.value_or(default_prec_);
        if (ladder_rank(t) < ladder_rank(from) && t == Precision::Float32)
            v.value = static_cast<double>(static_cast<float>(v.value));
        v.prec = t;
        return v;
    }

    const FunctionSpec& f_;
    const TypeConfig& config_;
    Precision default_prec_;
};

/// Mirrors the generated fixed-point integer code: alignment shifts, one
/// truncation onto the result format per operation, double-width
/// intermediates, truncated division, floor integer square root.
class FixedSim {
public:
    FixedSim(const FunctionSpec& f, const TypeConfig& config, const ErrorAnalysis& ea)
        : f_(f), config_(config), ea_(ea) {}

    Rational run(const std::map<std::string, Rational>& point) {
        std::map<std::string, Val> env;
        for (const std::string& p : f_.params) {
            FixedFormat fmt = ea_.var_format.at(p);
            env.emplace(p, Val{quantize(point.at(p), fmt.fractional_bits), fmt});
        }
        Val r = eval(f_.body, env);
        return Rational(BigInt(static_cast<long long>(r.word))) * pow2(-r.fmt.fractional_bits);
    }

private:
    using Word = __int128;

    struct Val {
        Word word;
        FixedFormat fmt;
    };

    static Word quantize(const Rational& v, int fbits) {
        // truncation toward minus infinity, exactly like the generated code
        return static_cast<Word>(
            static_cast<long long>(floor_rat(v * pow2(fbits)).convert_to<long long>()));
    }

    static Word shift_to(Word w, int from_f, int to_f) {
        if (to_f >= from_f) return w << (to_f - from_f);
        return w >> (from_f - to_f); // arithmetic shift: floor
    }

    static Word isqrt_word(Word x) {
        if (x < 0) throw Error("fixed sqrt of negative word");
        Word r = 0, bit = Word(1) << 124;
        while (bit > x) bit >>= 2;
        while (bit != 0) {
            if (x >= r + bit) {
                x -= r + bit;
                r = (r >> 1) + bit;
            } else {
                r >>= 1;
            }
            bit >>= 2;
        }
        return r;
    }

    FixedFormat node_format(const ExprPtr& e) const {
        auto it = ea_.node_format.find(e.get());
        if (it == ea_.node_format.end()) throw Error("missing fixed format for a node");
        return it->second;
    }

    Val eval(const ExprPtr& e, std::map<std::string, Val>& env) {
        switch (e->kind) {
            case ExprKind::Var: return env.at(e->name);
            case ExprKind::Const: {
                FixedFormat fmt = node_format(e);
                return {quantize(e->value, fmt.fractional_bits), fmt};
            }
            case ExprKind::Let: {
                Val bound = eval(e->a, env);
                auto vf = ea_.var_format.find(e->name);
                if (vf != ea_.var_format.end() && vf->second != bound.fmt) {
                    bound.word = shift_to(bound.word, bound.fmt.fractional_bits,
                                          vf->second.fractional_bits);
                    bound.fmt = vf->second;
                }
                env[e->name] = bound;
                return eval(e->b, env);
            }
            case ExprKind::Neg: {
                Val a = eval(e->a, env);
                FixedFormat fmt = node_format(e);
                return {-shift_to(a.word, a.fmt.fractional_bits, fmt.fractional_bits), fmt};
            }
            case ExprKind::Sqrt: {
                Val a = eval(e->a, env);
                FixedFormat fmt = node_format(e);
                int k = 2 * fmt.fractional_bits - a.fmt.fractional_bits;
                if (k < 0) throw Error("fixed sqrt shift underflow");
                return {isqrt_word(a.word << k), fmt};
            }
            default: break;
        }
        Val a = eval(e->a, env);
        Val b = eval(e->b, env);
        FixedFormat fmt = node_format(e);
        int fa = a.fmt.fractional_bits, fb = b.fmt.fractional_bits, fr = fmt.fractional_bits;
        switch (e->kind) {
            case ExprKind::Add:
            case ExprKind::Sub: {
                int fc = fa > fb ? fa : fb;
                Word x = shift_to(a.word, fa, fc), y = shift_to(b.word, fb, fc);
                Word s = e->kind == ExprKind::Add ? x + y : x - y;
                return {shift_to(s, fc, fr), fmt};
            }
            case ExprKind::Mul: {
                Word p = a.word * b.word; // fraction fa + fb
                return {shift_to(p, fa + fb, fr), fmt};
            }
            case ExprKind::Div: {
                if (b.word == 0) throw Error("fixed division by zero in simulation");
                int k = fr - fa + fb;
                Word num = a.word, den = b.word;
                if (k >= 0) num <<= k; else den <<= -k;
                return {num / den, fmt}; // C truncation toward zero
            }
            default: throw Error("unexpected node");
        }
    }

    const FunctionSpec& f_;
    const TypeConfig& config_;
    const ErrorAnalysis& ea_;
};

} // namespace detail

enum class FloatSimMode { Auto, Exact, Native };

inline bool config_has_quad(const TypeConfig& config) {
    for (const auto& [v, p] : config.assignment)
        if (p == Precision::Float128) return true;
    return false;
}

/// Simulates the finite-precision program the tuner certified. Float
/// configurations run natively when no quad precision appears (same
/// semantics, much faster); fixed configurations need the error analysis for
/// the per-node formats.
inline Rational simulate(const FunctionSpec& f, const TypeConfig& config,
                         const std::map<std::string, Rational>& point,
                         const ErrorAnalysis* analysis = nullptr,
                         FloatSimMode mode = FloatSimMode::Auto) {
    config.validate();
    if (config.is_float_config()) {
        bool native_ok = !config_has_quad(config);
        if (mode == FloatSimMode::Native || (mode == FloatSimMode::Auto && native_ok)) {
            if (!native_ok) throw Error("native simulation cannot model Float128");
            return detail::FloatNativeSim(f, config).run(point);
        }
        return detail::FloatExactSim(f, config).run(point);
    }
    if (!analysis) throw Error("fixed-point simulation needs the error analysis formats");
    return detail::FixedSim(f, config, *analysis).run(point);
}

} // namespace mixprec
