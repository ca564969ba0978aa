#pragma once

#include <stdexcept>
#include <string>

namespace pcc {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension or shape disagreement between objects.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Malformed graph wiring: unknown vertex, duplicate edge, forbidden self-edge, cycle.
class GraphError : public Error {
public:
    using Error::Error;
};

/// Invalid user configuration (maps to CLI exit code 1).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent data files.
class DataError : public Error {
public:
    using Error::Error;
};

}  // namespace pcc
