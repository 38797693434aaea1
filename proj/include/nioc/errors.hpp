#pragma once

#include <stdexcept>
#include <string>

namespace nioc {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A covariance could not be factorized even after jitter escalation.
class SingularCovariance : public Error {
 public:
  using Error::Error;
};

// A function evaluation or derivative probe produced NaN/Inf.
class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

// Value recursion blew past the divergence guard during a backward pass.
class DivergedValueRecursion : public Error {
 public:
  using Error::Error;
};

class UnknownTask : public Error {
 public:
  using Error::Error;
};

class MissingParameter : public Error {
 public:
  using Error::Error;
};

// Forward transform of a positivity-constrained parameter that is <= 0.
class NonPositiveParameter : public Error {
 public:
  using Error::Error;
};

class AllRestartsFailed : public Error {
 public:
  using Error::Error;
};

// Relative error against a true value of exactly zero.
class DivisionByZero : public Error {
 public:
  using Error::Error;
};

// Malformed input document (dataset JSON, config JSON, CSV).
class ParseError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace nioc
