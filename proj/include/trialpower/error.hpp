#pragma once

#include <stdexcept>
#include <string>

namespace trialpower {

/// Argument outside an operation's documented domain.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A quantity that has no value for the given input (e.g. a mean over an
/// empty window).
class UndefinedValue : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Input data that a test cannot be applied to (single category, empty arm).
class DegenerateInput : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed or inconsistent scenario configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dataset file could not be read or failed validation.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace trialpower
