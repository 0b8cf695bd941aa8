#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sctr {

/// Bad call-site input: shape mismatches, invalid enum values, empty masks.
/// CLI maps this to exit code 1.
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed on-disk data. Carries the byte offset where parsing failed
/// (SIZE_MAX when unknown). CLI maps this to exit code 2.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t byte_offset = SIZE_MAX)
        : std::runtime_error(what), offset(byte_offset) {}
    std::size_t offset;
};

/// Numerical failure: SVD non-convergence, NaN/Inf escaping an operation.
/// CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sctr
