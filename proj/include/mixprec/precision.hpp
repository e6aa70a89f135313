#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mixprec/rational.hpp"

namespace mixprec {

/// Finite-precision formats the tuner can assign. The float ladder follows
/// IEEE754 binary32/64/128 (quad assumed available in the target runtime);
/// the fixed ladder is signed 16/32-bit with an implicit radix point.
enum class Precision { Float32, Float64, Float128, Fixed16, Fixed32 };

inline bool is_float(Precision p) {
    return p == Precision::Float32 || p == Precision::Float64 || p == Precision::Float128;
}
inline bool is_fixed(Precision p) { return !is_float(p); }

/// Position on its own ladder; the two ladders are never compared.
inline int ladder_rank(Precision p) {
    switch (p) {
        case Precision::Float32: return 0;
        case Precision::Float64: return 1;
        case Precision::Float128: return 2;
        case Precision::Fixed16: return 0;
        case Precision::Fixed32: return 1;
    }
    return -1;
}

inline bool same_family(Precision a, Precision b) { return is_float(a) == is_float(b); }

inline Precision max_precision(Precision a, Precision b) {
    if (!same_family(a, b)) throw Error("mixed float/fixed precisions in one expression");
    return ladder_rank(a) >= ladder_rank(b) ? a : b;
}

/// Significand width including the implicit bit (floats only).
inline int significand_bits(Precision p) {
    switch (p) {
        case Precision::Float32: return 24;
        case Precision::Float64: return 53;
        case Precision::Float128: return 113;
        default: throw Error("significand_bits on a fixed-point precision");
    }
}

/// Bound on the relative error of one rounded operation: 2^-24, 2^-53, 2^-113.
inline Rational machine_epsilon(Precision p) { return pow2(-significand_bits(p)); }

inline Rational min_normal(Precision p) {
    switch (p) {
        case Precision::Float32: return pow2(-126);
        case Precision::Float64: return pow2(-1022);
        case Precision::Float128: return pow2(-16382);
        default: throw Error("min_normal on a fixed-point precision");
    }
}

inline Rational max_finite(Precision p) {
    switch (p) {
        case Precision::Float32: return (Rational(2) - pow2(-23)) * pow2(127);
        case Precision::Float64: return (Rational(2) - pow2(-52)) * pow2(1023);
        case Precision::Float128: return (Rational(2) - pow2(-112)) * pow2(16383);
        default: throw Error("max_finite on a fixed-point precision");
    }
}

/// Exponent of the smallest representable quantum (the denormal step).
inline long min_quantum_exp(Precision p) {
    switch (p) {
        case Precision::Float32: return -149;
        case Precision::Float64: return -1074;
        case Precision::Float128: return -16494;
        default: throw Error("min_quantum_exp on a fixed-point precision");
    }
}

inline int total_bits(Precision p) {
    switch (p) {
        case Precision::Fixed16: return 16;
        case Precision::Fixed32: return 32;
        case Precision::Float32: return 32;
        case Precision::Float64: return 64;
        case Precision::Float128: return 128;
    }
    return 0;
}

inline std::string precision_name(Precision p) {
    switch (p) {
        case Precision::Float32: return "f32";
        case Precision::Float64: return "f64";
        case Precision::Float128: return "f128";
        case Precision::Fixed16: return "fixed16";
        case Precision::Fixed32: return "fixed32";
    }
    return "?";
}

inline std::optional<Precision> parse_precision(std::string_view s) {
    if (s == "f32") return Precision::Float32;
    if (s == "f64") return Precision::Float64;
    if (s == "f128") return Precision::Float128;
    if (s == "fixed16") return Precision::Fixed16;
    if (s == "fixed32") return Precision::Fixed32;
    return std::nullopt;
}

/// Ascending list of precisions the tuner descends pairwise.
struct PrecisionLadder {
    std::vector<Precision> rungs;

    PrecisionLadder() = default;
    explicit PrecisionLadder(std::vector<Precision> r) : rungs(std::move(r)) { validate(); }

    void validate() const {
        if (rungs.empty()) throw Error("empty precision ladder");
        for (size_t i = 1; i < rungs.size(); ++i) {
            if (!same_family(rungs[i - 1], rungs[i]))
                throw Error("precision ladder mixes float and fixed formats");
            if (ladder_rank(rungs[i - 1]) >= ladder_rank(rungs[i]))
                throw Error("precision ladder must be strictly ascending");
        }
    }

    Precision top() const { return rungs.back(); }
    Precision bottom() const { return rungs.front(); }
    bool is_float_ladder() const { return is_float(rungs.front()); }

    std::string to_string() const {
        std::string s;
        for (size_t i = 0; i < rungs.size(); ++i) {
            if (i) s += ",";
            s += precision_name(rungs[i]);
        }
        return s;
    }

    static PrecisionLadder parse(std::string_view spec) {
        std::vector<Precision> rungs;
        size_t start = 0;
        while (start <= spec.size()) {
            size_t comma = spec.find(',', start);
            std::string_view tok = spec.substr(start, comma == std::string_view::npos
                                                          ? std::string_view::npos
                                                          : comma - start);
            auto p = parse_precision(tok);
            if (!p) throw Error("unknown precision '" + std::string(tok) + "' in ladder");
            rungs.push_back(*p);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        return PrecisionLadder(std::move(rungs));
    }
};

} // namespace mixprec
