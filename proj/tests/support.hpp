#pragma once

// Shared helpers for the test suites: deterministic random generators over
// exact rationals, an exact rational view of IEEE doubles (used as an
// independent rounding oracle), and benchmark sources.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mixprec/expr.hpp"
#include "mixprec/interval.hpp"
#include "mixprec/rational.hpp"

namespace testsupport {

using mixprec::BigInt;
using mixprec::Interval;
using mixprec::Rational;

using Rng = std::mt19937_64;

/// Uniform integer in [0, n); deterministic given the engine state.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    return n == 0 ? 0 : rng() % n;
}

/// Dyadic rational sampled uniformly from [lo, hi] on a 2^bits grid.
inline Rational random_dyadic(Rng& rng, const Rational& lo, const Rational& hi, int bits = 20) {
    std::uint64_t k = rng() & ((std::uint64_t(1) << bits) - 1);
    return lo + (hi - lo) * Rational(BigInt(k)) / Rational(BigInt(1) << bits);
}

inline Rational random_dyadic(Rng& rng, const Interval& iv, int bits = 20) {
    return random_dyadic(rng, iv.lo, iv.hi, bits);
}

/// Random interval with endpoints on a small dyadic grid inside [-scale, scale].
inline Interval random_interval(Rng& rng, long scale = 16) {
    Rational a = random_dyadic(rng, Rational(-scale), Rational(scale), 12);
    Rational b = random_dyadic(rng, Rational(-scale), Rational(scale), 12);
    return a <= b ? Interval(a, b) : Interval(b, a);
}

/// Exact rational value of a finite double.
inline Rational rational_of_double(double d) {
    if (d == 0.0) return Rational(0);
    int exp = 0;
    double m = std::frexp(d, &exp); // d = m * 2^exp, |m| in [0.5, 1)
    long long mant = static_cast<long long>(std::ldexp(m, 53));
    return Rational(BigInt(mant)) * mixprec::pow2(exp - 53);
}

inline Rational rational_of_float(float f) { return rational_of_double(static_cast<double>(f)); }

/// Random expression over the given variables. Division and square roots are
/// requested via flags; callers filter out instances whose ranges are
/// invalid (zero denominators, negative radicands).
inline mixprec::ExprPtr random_expr(Rng& rng, int depth, const std::vector<std::string>& vars,
                                    bool allow_div = false, bool allow_sqrt = false) {
    using namespace mixprec;
    if (depth == 0 || uniform_index(rng, 4) == 0) {
        if (uniform_index(rng, 4) == 0) {
            long v = static_cast<long>(uniform_index(rng, 17)) - 8;
            return make_const(Rational(BigInt(v)) / 2);
        }
        return make_var(vars[uniform_index(rng, vars.size())]);
    }
    int n_ops = 4 + (allow_div ? 1 : 0) + (allow_sqrt ? 1 : 0);
    switch (uniform_index(rng, n_ops)) {
        case 0: return make_add(random_expr(rng, depth - 1, vars, allow_div, allow_sqrt),
                                random_expr(rng, depth - 1, vars, allow_div, allow_sqrt));
        case 1: return make_sub(random_expr(rng, depth - 1, vars, allow_div, allow_sqrt),
                                random_expr(rng, depth - 1, vars, allow_div, allow_sqrt));
        case 2: return make_mul(random_expr(rng, depth - 1, vars, allow_div, allow_sqrt),
                                random_expr(rng, depth - 1, vars, allow_div, allow_sqrt));
        case 3: return make_neg(random_expr(rng, depth - 1, vars, allow_div, allow_sqrt));
        case 4:
            if (allow_div)
                return make_div(random_expr(rng, depth - 1, vars, allow_div, allow_sqrt),
                                random_expr(rng, depth - 1, vars, allow_div, allow_sqrt));
            [[fallthrough]];
        default:
            return make_sqrt(random_expr(rng, depth - 1, vars, allow_div, allow_sqrt));
    }
}

// --- benchmark sources ---------------------------------------------------

inline const char* rigid_body1_source() {
    return R"(def rigidBody1(x1: Real, x2: Real, x3: Real): Real = {
  require(-15.0 <= x1 && x1 <= 15 && -15.0 <= x2 && x2 <= 15.0 && -15.0 <= x3 && x3 <= 15)
  -x1*x2 - 2*x2*x3 - x1 - x3
} ensuring(res => res +/- 1.75e-13)
)";
}

inline const char* rigid_body2_source() {
    return R"(def rigidBody2(x1: Real, x2: Real, x3: Real): Real = {
  require(-15.0 <= x1 && x1 <= 15.0 && -15.0 <= x2 && x2 <= 15.0 && -15.0 <= x3 && x3 <= 15.0)
  2*x1*x2*x3 + 3*x3*x3 - x2*x1*x2*x3 + 3*x3*x3 - x2
}
)";
}

} // namespace testsupport
