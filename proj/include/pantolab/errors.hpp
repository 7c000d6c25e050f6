#pragma once

#include <stdexcept>
#include <string>

namespace pantolab {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input outside the mathematical domain of an operation.
struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// Evaluation requested at a pole.
struct PoleError : DomainError {
    explicit PoleError(const std::string& msg) : DomainError(msg) {}
};

/// The working precision cannot certify the requested accuracy.
/// Carries a suggested bit count; callers should retry with more bits.
struct PrecisionError : Error {
    long suggested_bits;
    PrecisionError(const std::string& msg, long suggested)
        : Error(msg + " (retry with >= " + std::to_string(suggested) + " bits)"),
          suggested_bits(suggested) {}
};

/// An iteration failed to converge.  Carries the last iterate for diagnosis.
struct ConvergenceError : Error {
    std::string last_iterate;
    ConvergenceError(const std::string& msg, std::string iterate)
        : Error(msg + " (last iterate " + iterate + ")"),
          last_iterate(std::move(iterate)) {}
};

/// Not enough input data for a statistic or fit.
struct InsufficientData : Error {
    explicit InsufficientData(const std::string& msg) : Error(msg) {}
};

/// Structurally invalid input (bad ranges, non-monotone sequences, ...).
struct InvalidInput : Error {
    explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

/// Requested a feature outside the supported subset.
struct Unsupported : Error {
    explicit Unsupported(const std::string& msg) : Error(msg) {}
};

} // namespace pantolab
