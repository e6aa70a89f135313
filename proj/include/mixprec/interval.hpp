#pragma once

#include <algorithm>
#include <initializer_list>
#include <optional>
#include <string>

#include "mixprec/rational.hpp"

namespace mixprec {

enum class OpKind { Add, Sub, Mul, Div, Neg, Sqrt };

inline const char* op_name(OpKind op) {
    switch (op) {
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::Mul: return "mul";
        case OpKind::Div: return "div";
        case OpKind::Neg: return "neg";
        case OpKind::Sqrt: return "sqrt";
    }
    return "?";
}

/// Closed interval with exact rational endpoints.
struct Interval {
    Rational lo;
    Rational hi;

    Interval() = default;
    Interval(Rational point) : lo(point), hi(std::move(point)) {} // NOLINT
    Interval(Rational l, Rational h) : lo(std::move(l)), hi(std::move(h)) {
        if (lo > hi) throw Error("interval with lo > hi");
    }

    bool contains_zero() const { return lo.sign() <= 0 && hi.sign() >= 0; }
    bool contains(const Rational& x) const { return lo <= x && x <= hi; }
    bool encloses(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
    bool is_point() const { return lo == hi; }
    Rational width() const { return hi - lo; }
    Rational midpoint() const { return (lo + hi) / 2; }

    bool operator==(const Interval& o) const = default;

    std::string to_string() const { return "[" + lo.to_string() + ", " + hi.to_string() + "]"; }
};

/// max(|lo|, |hi|); the magnitude bound used throughout the error analysis.
inline Rational max_abs(const Interval& i) { return max(abs(i.lo), abs(i.hi)); }

/// min |x| over the interval (0 if it straddles zero).
inline Rational min_abs(const Interval& i) {
    if (i.contains_zero()) return Rational(0);
    return min(abs(i.lo), abs(i.hi));
}

inline Interval iadd(const Interval& a, const Interval& b) { return {a.lo + b.lo, a.hi + b.hi}; }
inline Interval isub(const Interval& a, const Interval& b) { return {a.lo - b.hi, a.hi - b.lo}; }
inline Interval ineg(const Interval& a) { return {-a.hi, -a.lo}; }

inline Interval imul(const Interval& a, const Interval& b) {
    Rational p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    return {min(min(p1, p2), min(p3, p4)), max(max(p1, p2), max(p3, p4))};
}

inline Interval idiv(const Interval& a, const Interval& b) {
    if (b.contains_zero()) throw DivisionByZeroRange();
    Interval inv{b.hi.reciprocal(), b.lo.reciprocal()};
    return imul(a, inv);
}

/// Outward rational enclosure of the square root image.
inline Interval isqrt(const Interval& a, long tol_bits = 120) {
    if (a.lo.sign() < 0) throw NegativeSqrtRange();
    auto lo = sqrt_enclosure(a.lo, tol_bits);
    auto hi = sqrt_enclosure(a.hi, tol_bits);
    return {lo.first, hi.second};
}

inline Interval ihull(const Interval& a, const Interval& b) {
    return {min(a.lo, b.lo), max(a.hi, b.hi)};
}

inline std::optional<Interval> iintersect(const Interval& a, const Interval& b) {
    Rational lo = max(a.lo, b.lo), hi = min(a.hi, b.hi);
    if (lo > hi) return std::nullopt;
    return Interval{lo, hi};
}

/// Single dispatch entry used by the range analysis. `b` is ignored for
/// unary operations.
inline Interval interval_op(OpKind op, const Interval& a, const Interval* b = nullptr) {
    switch (op) {
        case OpKind::Add: return iadd(a, *b);
        case OpKind::Sub: return isub(a, *b);
        case OpKind::Mul: return imul(a, *b);
        case OpKind::Div: return idiv(a, *b);
        case OpKind::Neg: return ineg(a);
        case OpKind::Sqrt: return isqrt(a);
    }
    throw Error("unknown interval op");
}

} // namespace mixprec
