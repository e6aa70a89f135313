#pragma once

#include <atomic>
#include <cstdint>
#include <utility>
#include <vector>

#include "mixprec/interval.hpp"
#include "mixprec/rational.hpp"

namespace mixprec {

/// Monotone source of fresh noise indices. A single process-wide counter is
/// enough: soundness only needs fresh indices to be unique, and the interval
/// concretization of a form does not depend on index values.
class NoiseAllocator {
public:
    std::uint64_t fresh() { return next_.fetch_add(1, std::memory_order_relaxed); }

private:
    std::atomic<std::uint64_t> next_{1};
};

inline NoiseAllocator& global_noise_allocator() {
    static NoiseAllocator alloc;
    return alloc;
}

/// Affine form x0 + sum(c_i * eps_i) with eps_i in [-1, 1]. Linear operations
/// are exact on the coefficients, which is what lets correlated terms cancel
/// (x - x == 0); nonlinear operations add one fresh term bounding the
/// residual. Terms are kept sorted by index with no zero coefficients.
class AffineForm {
public:
    struct Term {
        std::uint64_t index;
        Rational coeff;
        bool operator==(const Term&) const = default;
    };

    AffineForm() = default;
    explicit AffineForm(Rational center) : x0_(std::move(center)) {}

    static AffineForm constant(Rational c) { return AffineForm(std::move(c)); }

    static AffineForm from_interval(const Interval& i, NoiseAllocator& alloc = global_noise_allocator()) {
        AffineForm f(i.midpoint());
        Rational rad = i.width() / 2;
        if (!rad.is_zero()) f.terms_.push_back({alloc.fresh(), rad});
        return f;
    }

    const Rational& center() const { return x0_; }
    const std::vector<Term>& terms() const { return terms_; }

    Rational radius() const {
        Rational r;
        for (const Term& t : terms_) r += abs(t.coeff);
        return r;
    }

    Interval to_interval() const {
        Rational r = radius();
        return {x0_ - r, x0_ + r};
    }

    Rational max_abs() const { return mixprec::max_abs(to_interval()); }

    bool is_zero() const { return x0_.is_zero() && terms_.empty(); }

    AffineForm operator-() const {
        AffineForm r(-x0_);
        r.terms_.reserve(terms_.size());
        for (const Term& t : terms_) r.terms_.push_back({t.index, -t.coeff});
        return r;
    }

    AffineForm operator+(const AffineForm& o) const { return combine(o, false); }
    AffineForm operator-(const AffineForm& o) const { return combine(o, true); }

    AffineForm operator+(const Rational& c) const {
        AffineForm r = *this;
        r.x0_ += c;
        return r;
    }

    /// Exact scaling by a rational.
    AffineForm scale(const Rational& k) const {
        AffineForm r(x0_ * k);
        if (k.is_zero()) return r;
        r.terms_.reserve(terms_.size());
        for (const Term& t : terms_) r.terms_.push_back({t.index, t.coeff * k});
        return r;
    }

    /// Appends a fresh noise term of magnitude |c|.
    AffineForm with_fresh_term(const Rational& c, NoiseAllocator& alloc = global_noise_allocator()) const {
        AffineForm r = *this;
        if (!c.is_zero()) r.terms_.push_back({alloc.fresh(), abs(c)});
        return r;
    }

    friend AffineForm affine_mul(const AffineForm& a, const AffineForm& b, NoiseAllocator& alloc);

private:
    AffineForm combine(const AffineForm& o, bool subtract) const {
        AffineForm r(subtract ? x0_ - o.x0_ : x0_ + o.x0_);
        r.terms_.reserve(terms_.size() + o.terms_.size());
        size_t i = 0, j = 0;
        while (i < terms_.size() || j < o.terms_.size()) {
            if (j == o.terms_.size() || (i < terms_.size() && terms_[i].index < o.terms_[j].index)) {
                r.terms_.push_back(terms_[i++]);
            } else if (i == terms_.size() || o.terms_[j].index < terms_[i].index) {
                const Term& t = o.terms_[j++];
                r.terms_.push_back({t.index, subtract ? -t.coeff : t.coeff});
            } else {
                Rational c = subtract ? terms_[i].coeff - o.terms_[j].coeff
                                      : terms_[i].coeff + o.terms_[j].coeff;
                if (!c.is_zero()) r.terms_.push_back({terms_[i].index, std::move(c)});
                ++i;
                ++j;
            }
        }
        return r;
    }

    Rational x0_;
    std::vector<Term> terms_;
};

/// Product with the standard rad(a)*rad(b) residual as one fresh term.
inline AffineForm affine_mul(const AffineForm& a, const AffineForm& b,
                             NoiseAllocator& alloc = global_noise_allocator()) {
    AffineForm r = a.scale(b.center()) + b.scale(a.center());
    r.x0_ -= a.center() * b.center(); // a0*b0 was added twice
    Rational resid = a.radius() * b.radius();
    return r.with_fresh_term(resid, alloc);
}

/// Reciprocal via the min-range linear approximation of 1/x over the
/// concretization of `a`, which must not straddle zero.
inline AffineForm affine_reciprocal(const AffineForm& a,
                                    NoiseAllocator& alloc = global_noise_allocator()) {
    Interval iv = a.to_interval();
    if (iv.contains_zero()) throw DivisionByZeroRange();
    if (iv.lo.sign() < 0) return -affine_reciprocal(-a, alloc);
    const Rational& l = iv.lo;
    const Rational& u = iv.hi;
    // slope alpha = -1/u^2; e(x) = 1/x - alpha*x is decreasing on [l, u]
    Rational alpha = -(u * u).reciprocal();
    Rational e_hi = l.reciprocal() + l / (u * u); // e(l)
    Rational e_lo = Rational(2) / u;              // e(u)
    Rational zeta = (e_hi + e_lo) / 2;
    Rational delta = (e_hi - e_lo) / 2;
    return (a.scale(alpha) + zeta).with_fresh_term(delta, alloc);
}

inline AffineForm affine_div(const AffineForm& a, const AffineForm& b,
                             NoiseAllocator& alloc = global_noise_allocator()) {
    return affine_mul(a, affine_reciprocal(b, alloc), alloc);
}

/// Square root via a min-range linearization. Endpoint square roots are
/// irrational, so outward rational enclosures stand in for them; every bound
/// is chosen on the safe side.
inline AffineForm affine_sqrt(const AffineForm& a,
                              NoiseAllocator& alloc = global_noise_allocator()) {
    Interval iv = a.to_interval();
    if (iv.lo.sign() < 0) throw NegativeSqrtRange();
    auto sl = sqrt_enclosure(iv.lo); // [lo, hi] around sqrt(l)
    auto su = sqrt_enclosure(iv.hi);
    if (iv.is_point()) {
        Rational zeta = (sl.first + sl.second) / 2;
        return AffineForm::constant(zeta).with_fresh_term((sl.second - sl.first) / 2, alloc);
    }
    // slope alpha <= 1/(2*sqrt(u)) keeps e(x) = sqrt(x) - alpha*x increasing
    Rational alpha = su.second.is_zero() ? Rational(0) : (su.second * 2).reciprocal();
    Rational e_min = sl.first - alpha * iv.lo;  // lower bound of e(l)
    Rational e_max = su.second - alpha * iv.hi; // upper bound of e(u)
    if (e_min > e_max) e_min = e_max;           // enclosure slack guard
    Rational zeta = (e_min + e_max) / 2;
    Rational delta = (e_max - e_min) / 2;
    return (a.scale(alpha) + zeta).with_fresh_term(delta, alloc);
}

inline AffineForm affine_op(OpKind op, const AffineForm& a, const AffineForm* b = nullptr,
                            NoiseAllocator& alloc = global_noise_allocator()) {
    switch (op) {
        case OpKind::Add: return a + *b;
        case OpKind::Sub: return a - *b;
        case OpKind::Mul: return affine_mul(a, *b, alloc);
        case OpKind::Div: return affine_div(a, *b, alloc);
        case OpKind::Neg: return -a;
        case OpKind::Sqrt: return affine_sqrt(a, alloc);
    }
    throw Error("unknown affine op");
}

inline Interval to_interval(const AffineForm& f) { return f.to_interval(); }

} // namespace mixprec
