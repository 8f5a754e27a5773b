#ifndef PROMPTWISE_ERROR_HPP
#define PROMPTWISE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pw {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape/dimension mismatch between tensors; message names both shapes.
struct ShapeError : Error {
    using Error::Error;
};

// Index or step outside a valid range.
struct RangeError : Error {
    using Error::Error;
};

// Invalid configuration value (bad prompt length, eta out of range, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Non-finite value where a finite one is required.
struct NumericError : Error {
    using Error::Error;
};

// Invalid argument to a pure function (empty input, arity mismatch).
struct ArgumentError : Error {
    using Error::Error;
};

// A stated invariant was violated (missing gradient on a trainable tensor).
struct InvariantError : Error {
    using Error::Error;
};

// Metric undefined for the given inputs (single-class AUROC).
struct MetricError : Error {
    using Error::Error;
};

// Config/manifest file could not be parsed; carries a 1-based line number.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

// A pipeline stage input (checkpoint, dataset) is missing.
struct DependencyError : Error {
    using Error::Error;
};

} // namespace pw

#endif
