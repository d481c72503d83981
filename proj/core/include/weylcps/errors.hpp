// Error taxonomy shared by every module. All engine failures are exceptions
// rooted at weylcps::Error so the CLI can map them onto exit codes.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace weylcps {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Expression language
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& what)
      : Error("syntax error at position " + std::to_string(position) + ": " + what),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class UnknownIdentifier : public Error {
 public:
  using Error::Error;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

// Evaluation: log/sqrt at non-positive arguments, division by zero, fractional
// powers of negative bases. Raised eagerly so residual reports never carry NaNs.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Charts and fields
class OutOfChart : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Metrics
class DegenerateMetric : public Error {
 public:
  using Error::Error;
};

class PeriodicityError : public Error {
 public:
  using Error::Error;
};

class NonPeriodicAxis : public Error {
 public:
  using Error::Error;
};

class FrameDegenerate : public Error {
 public:
  using Error::Error;
};

// Construction preconditions
class NotClosed : public Error {
 public:
  using Error::Error;
};

class NotParallel : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Integration
class ToleranceNotMet : public Error {
 public:
  using Error::Error;
};

// Scenario ingestion
class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace weylcps
