#pragma once

#include <stdexcept>
#include <string>

namespace sieve {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Comparison between values of different kinds (e.g. date vs string).
struct TypeError : Error {
    using Error::Error;
};

// Failure while evaluating a policy condition, including derived sub-queries.
struct EvalError : Error {
    using Error::Error;
};

struct ParseError : Error {
    ParseError(const std::string &msg, size_t position)
        : Error(msg + " (at offset " + std::to_string(position) + ")"), pos(position) {}
    size_t pos;
};

struct LoadError : Error {
    LoadError(const std::string &msg, int64_t row)
        : Error(msg + " (row " + std::to_string(row) + ")"), row_number(row) {}
    int64_t row_number;
};

struct CalibrationError : Error {
    using Error::Error;
};

struct PlanError : Error {
    using Error::Error;
};

struct StoreError : Error {
    using Error::Error;
};

struct UnsupportedDenyError : Error {
    using Error::Error;
};

struct ParameterError : Error {
    using Error::Error;
};

} // namespace sieve
