#pragma once

#include <stdexcept>
#include <string>

namespace ssb {

// Base of the library's exception hierarchy. The three direct children map
// 1:1 onto CLI exit codes: ConfigError -> 2, DataError -> 3, DomainError -> 4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration: unknown option values, inconsistent settings, missing
// required inputs named by the user.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Bad or insufficient input data: malformed CSV rows, duplicate keys,
// coverage gaps, series too short for a requested window.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// A window whose history is shorter than the operation requires.
class InsufficientHistoryError : public DataError {
public:
    explicit InsufficientHistoryError(const std::string& msg) : DataError(msg) {}
};

// An estimator window whose denominator is exactly zero (e.g. all-zero
// returns); callers either surface it or record a skip, never default it.
class DegenerateWindowError : public DataError {
public:
    explicit DegenerateWindowError(const std::string& msg) : DataError(msg) {}
};

// Numeric/domain violations: non-positive model parameters, evaluation
// outside a formula's domain, diverging simulations.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

} // namespace ssb
