#pragma once

#include <stdexcept>
#include <string>

namespace mixprec {

/// Base class for all analysis and pipeline errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Denominator range contains zero.
class DivisionByZeroRange : public Error {
public:
    explicit DivisionByZeroRange(const std::string& msg = "division by a range containing zero")
        : Error(msg) {}
};

/// Square root of a range with a negative lower bound.
class NegativeSqrtRange : public Error {
public:
    explicit NegativeSqrtRange(const std::string& msg = "square root of a possibly negative range")
        : Error(msg) {}
};

/// A value range can overflow, produce NaN, or sits entirely in the
/// denormal band of the operation precision.
class SpecialValueError : public Error {
public:
    explicit SpecialValueError(const std::string& msg) : Error(msg) {}
};

/// A fixed-point format cannot represent the required range.
class FormatOverflow : public Error {
public:
    explicit FormatOverflow(const std::string& msg) : Error(msg) {}
};

/// Even the highest precision on the ladder misses the target error.
class NoValidConfig : public Error {
public:
    explicit NoValidConfig(const std::string& msg) : Error(msg) {}
};

/// Benchmarked cost table lacks an entry for an operation.
class MissingCostEntry : public Error {
public:
    explicit MissingCostEntry(const std::string& msg) : Error(msg) {}
};

/// Syntax or semantic error in an input file, with source position.
class ParseError : public Error {
public:
    ParseError(int line, int col, const std::string& msg)
        : Error("line " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line(line), col(col) {}
    int line;
    int col;
};

} // namespace mixprec
