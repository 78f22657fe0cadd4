#pragma once

#include <stdexcept>
#include <string>

namespace edsgd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent graph input (self-loop, duplicate edge, bad id).
class GraphError : public Error {
public:
  using Error::Error;
};

/// Infeasible or malformed scheduling request.
class ScheduleError : public Error {
public:
  using Error::Error;
};

/// Numeric precondition failure (asymmetric input, dimension mismatch, ...).
class NumericError : public Error {
public:
  using Error::Error;
};

/// Dataset parsing or partitioning failure.
class DataError : public Error {
public:
  using Error::Error;
};

/// Training loss blew past the divergence guard.
class DivergenceError : public Error {
public:
  using Error::Error;
};

/// Bad experiment configuration or CLI usage.
class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace edsgd
