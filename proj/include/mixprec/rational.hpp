#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cassert>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "mixprec/errors.hpp"

namespace mixprec {

using BigInt = boost::multiprecision::cpp_int;

/// Exact rational number. All internal range and error computations run on
/// this type so that the analysis itself commits no roundoff. The value is
/// kept canonical at all times: gcd(|num|, den) = 1 and den > 0.
class Rational {
public:
    Rational() : v_(0) {}
    Rational(long long n) : v_(n) {} // NOLINT: implicit by design
    Rational(const BigInt& n) : v_(n) {}
    Rational(const BigInt& num, const BigInt& den) {
        if (den == 0) throw Error("rational with zero denominator");
        // normalize the sign here; the backend requires a positive denominator
        if (den < 0) v_.assign(boost::multiprecision::cpp_rational(-num, -den));
        else v_.assign(boost::multiprecision::cpp_rational(num, den));
    }
    explicit Rational(boost::multiprecision::cpp_rational v) : v_(std::move(v)) {}

    BigInt numerator() const { return boost::multiprecision::numerator(v_); }
    BigInt denominator() const { return boost::multiprecision::denominator(v_); }

    bool is_zero() const { return v_.is_zero(); }
    bool is_integer() const { return denominator() == 1; }
    int sign() const { return v_ < 0 ? -1 : (v_ > 0 ? 1 : 0); }

    Rational operator-() const { return Rational(boost::multiprecision::cpp_rational(-v_)); }
    Rational operator+(const Rational& o) const { return Rational(boost::multiprecision::cpp_rational(v_ + o.v_)); }
    Rational operator-(const Rational& o) const { return Rational(boost::multiprecision::cpp_rational(v_ - o.v_)); }
    Rational operator*(const Rational& o) const { return Rational(boost::multiprecision::cpp_rational(v_ * o.v_)); }
    Rational operator/(const Rational& o) const {
        if (o.is_zero()) throw Error("rational division by zero");
        return Rational(boost::multiprecision::cpp_rational(v_ / o.v_));
    }
    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }
    Rational& operator/=(const Rational& o) { *this = *this / o; return *this; }

    bool operator==(const Rational& o) const { return v_ == o.v_; }
    std::strong_ordering operator<=>(const Rational& o) const {
        int c = v_.compare(o.v_);
        return c < 0 ? std::strong_ordering::less
                     : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
    }

    Rational reciprocal() const {
        if (is_zero()) throw Error("reciprocal of zero");
        return Rational(denominator(), numerator());
    }

    /// Nearest double; used only for display and heuristics, never for analysis.
    double to_double() const { return v_.convert_to<double>(); }

    /// "n" or "n/d".
    std::string to_string() const {
        std::string s = numerator().str();
        if (!is_integer()) s += "/" + denominator().str();
        return s;
    }

    const boost::multiprecision::cpp_rational& raw() const { return v_; }

private:
    boost::multiprecision::cpp_rational v_;
};

inline Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }
inline Rational min(const Rational& a, const Rational& b) { return a < b ? a : b; }
inline Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

/// 2^e for any (possibly negative) exponent.
inline Rational pow2(long e) {
    BigInt p = BigInt(1) << static_cast<unsigned>(e < 0 ? -e : e);
    return e >= 0 ? Rational(p) : Rational(BigInt(1), p);
}

/// 10^e for any (possibly negative) exponent.
inline Rational pow10(long e) {
    BigInt p = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(e < 0 ? -e : e));
    return e >= 0 ? Rational(p) : Rational(BigInt(1), p);
}

/// Number of bits of a positive integer (msb index + 1).
inline long bit_length(const BigInt& n) {
    assert(n > 0);
    return static_cast<long>(boost::multiprecision::msb(n)) + 1;
}

/// floor(x/y) for integers, exact also for negative x.
inline BigInt floor_div(const BigInt& x, const BigInt& y) {
    assert(y > 0);
    BigInt q = x / y;
    if (x % y != 0 && x < 0) --q;
    return q;
}

/// Largest k with 2^k <= |r|. Requires r != 0.
inline long floor_log2_abs(const Rational& r) {
    assert(!r.is_zero());
    BigInt num = boost::multiprecision::abs(r.numerator());
    BigInt den = r.denominator();
    long k = bit_length(num) - bit_length(den);
    // candidate k is within one of the answer; bit lengths decide all but
    // the boundary case, which needs one exact shifted comparison
    auto le_pow2 = [&](long e) { // 2^e <= num/den ?
        long ln = bit_length(num), ld = bit_length(den) + e;
        if (ld < ln) return true;
        if (ld > ln) return false;
        if (e >= 0) return (den << static_cast<unsigned>(e)) <= num;
        return den <= (num << static_cast<unsigned>(-e));
    };
    while (!le_pow2(k)) --k;
    while (le_pow2(k + 1)) ++k;
    return k;
}

/// Largest d with 10^d <= |r|. Requires r != 0.
inline long floor_log10_abs(const Rational& r) {
    assert(!r.is_zero());
    // 10^d <= v  <=>  d <= log10(v); start from a bit-length estimate
    long k2 = floor_log2_abs(r);
    long d = static_cast<long>(static_cast<double>(k2) * 0.30102999566398);
    Rational a = abs(r);
    while (pow10(d) > a) --d;
    while (pow10(d + 1) <= a) ++d;
    return d;
}

/// Floor of a rational as an integer.
inline BigInt floor_rat(const Rational& r) { return floor_div(r.numerator(), r.denominator()); }

/// Ceiling of a rational as an integer.
inline BigInt ceil_rat(const Rational& r) {
    BigInt f = floor_rat(r);
    return (Rational(f) == r) ? f : f + 1;
}

/// Parses a decimal or scientific literal exactly ("2.0", "1.75e-13", "-3").
/// Returns nullopt if the text is not a valid literal.
inline std::optional<Rational> parse_decimal(std::string_view s) {
    size_t i = 0;
    bool neg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) { neg = s[i] == '-'; ++i; }
    std::string digits;
    long frac_digits = 0;
    bool any = false;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') { digits += s[i++]; any = true; }
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
            digits += s[i++];
            ++frac_digits;
            any = true;
        }
    }
    if (!any) return std::nullopt;
    long exp10 = 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        bool eneg = false;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) { eneg = s[i] == '-'; ++i; }
        if (i >= s.size()) return std::nullopt;
        long e = 0;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
            e = e * 10 + (s[i++] - '0');
            if (e > 1000000) return std::nullopt;
        }
        exp10 = eneg ? -e : e;
    }
    if (i != s.size()) return std::nullopt;
    // strip leading zeros; the bigint constructor would read them as octal
    size_t nz = digits.find_first_not_of('0');
    BigInt mant(nz == std::string::npos ? "0" : digits.substr(nz));
    if (neg) mant = -mant;
    Rational v = Rational(mant) * pow10(exp10 - frac_digits);
    return v;
}

/// Exact decimal rendering. Only defined for rationals whose denominator is
/// of the form 2^a * 5^b (every parsed literal and every scaled error bound
/// the tool emits). Produces "0.0", "2.0", "1.75e-13", "-705.0", ...
inline std::string exact_decimal_string(const Rational& r) {
    if (r.is_zero()) return "0.0";
    BigInt num = boost::multiprecision::abs(r.numerator());
    BigInt den = r.denominator();
    long a = 0, b = 0;
    while (den % 2 == 0) { den /= 2; ++a; }
    while (den % 5 == 0) { den /= 5; ++b; }
    if (den != 1) throw Error("rational has no finite decimal expansion: " + r.to_string());
    // scale to an integer mantissa over 10^k
    long k = a > b ? a : b;
    BigInt mant = num * boost::multiprecision::pow(BigInt(5), static_cast<unsigned>(k - b)) *
                  boost::multiprecision::pow(BigInt(2), static_cast<unsigned>(k - a));
    std::string m = mant.str();
    // strip trailing zeros into the exponent
    long tz = 0;
    while (m.size() > 1 && m.back() == '0') { m.pop_back(); ++tz; }
    long exp = static_cast<long>(m.size()) - 1 - (k - tz); // value = 0.m * 10^(exp+1)
    std::string sign = r.sign() < 0 ? "-" : "";
    if (exp >= -4 && exp < 17) {
        // plain notation
        std::string out;
        if (exp >= static_cast<long>(m.size()) - 1) {
            out = m + std::string(exp - (m.size() - 1), '0') + ".0";
        } else if (exp >= 0) {
            out = m.substr(0, exp + 1) + "." + m.substr(exp + 1);
        } else {
            out = "0." + std::string(-exp - 1, '0') + m;
        }
        return sign + out;
    }
    std::string out = m.substr(0, 1);
    if (m.size() > 1) out += "." + m.substr(1);
    out += "e" + std::to_string(exp);
    return sign + out;
}

/// Decimal approximation with the given number of significant digits,
/// rounded away from zero (so printed error bounds stay sound).
inline std::string decimal_string_up(const Rational& r, int sig_digits) {
    if (r.is_zero()) return "0.0";
    long e = floor_log10_abs(r);
    Rational scaled = abs(r) / pow10(e - sig_digits + 1);
    BigInt m = ceil_rat(scaled);
    if (m == boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(sig_digits))) {
        m /= 10;
        ++e;
    }
    Rational rounded = Rational(m) * pow10(e - sig_digits + 1);
    std::string s = exact_decimal_string(rounded);
    return r.sign() < 0 ? "-" + s : s;
}

/// Smallest 3-significant-digit decimal >= r (r > 0). Used to "round up a
/// little" when deriving target error bounds from computed ones.
inline Rational round_up_3sig(const Rational& r) {
    assert(r.sign() > 0);
    long e = floor_log10_abs(r);
    BigInt m = ceil_rat(r / pow10(e - 2)); // in [100, 1000]
    if (m == 1000) { m = 100; ++e; }
    return Rational(m) * pow10(e - 2);
}

/// Outward enclosure [lo, hi] of sqrt(x) with hi - lo <= 2^-tol_bits * sqrt(x).
/// Integer-square-root based, fully exact.
inline std::pair<Rational, Rational> sqrt_enclosure(const Rational& x, long tol_bits = 120) {
    if (x.sign() < 0) throw NegativeSqrtRange("sqrt of a negative rational");
    if (x.is_zero()) return {Rational(0), Rational(0)};
    // sqrt(p/q) = sqrt(p*q)/q; scale so the integer sqrt carries >= tol_bits bits
    BigInt p = x.numerator(), q = x.denominator();
    BigInt m = p * q;
    long need = 2 * (tol_bits + 2) - bit_length(m);
    long s = need > 0 ? need : 0;
    if (s % 2 != 0) ++s;
    BigInt scaled = m << static_cast<unsigned>(s);
    BigInt r = boost::multiprecision::sqrt(scaled); // floor integer sqrt
    BigInt den = q << static_cast<unsigned>(s / 2);
    return {Rational(r, den), Rational(r + 1, den)};
}

/// Rounds x to the nearest (ties to even) value of the form n * 2^qexp with
/// qexp = max(floor_log2|x| - (sig_bits-1), min_qexp). This is exactly IEEE
/// round-to-nearest at `sig_bits` significand bits with gradual underflow
/// below 2^(min_qexp + sig_bits - 1).
inline Rational round_to_precision(const Rational& x, int sig_bits, long min_qexp) {
    if (x.is_zero()) return x;
    long e = floor_log2_abs(x);
    long qexp = e - (sig_bits - 1);
    if (qexp < min_qexp) qexp = min_qexp;
    // integer-only: x / 2^qexp = num2 / den2, rounded to nearest, ties even
    BigInt num = x.numerator(), den = x.denominator();
    bool neg = num < 0;
    if (neg) num = -num;
    if (qexp < 0) num <<= static_cast<unsigned>(-qexp);
    else den <<= static_cast<unsigned>(qexp);
    BigInt quo = num / den, rem = num - quo * den;
    rem <<= 1;
    if (rem > den || (rem == den && boost::multiprecision::bit_test(quo, 0))) ++quo;
    if (neg) quo = -quo;
    if (qexp >= 0) return Rational(BigInt(quo << static_cast<unsigned>(qexp)));
    return Rational(quo, BigInt(1) << static_cast<unsigned>(-qexp));
}

} // namespace mixprec
