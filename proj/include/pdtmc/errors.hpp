#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pdtmc {

/// Location of a token or construct in source text.
struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t line = 1;
  std::size_t column = 1;
};

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ratfunc
class DivisionByZeroFunction : public Error {
 public:
  DivisionByZeroFunction() : Error("division by the zero function") {}
};

class PoleAtPoint : public Error {
 public:
  using Error::Error;
};

class UnboundParameter : public Error {
 public:
  explicit UnboundParameter(const std::string& name)
      : Error("unbound parameter '" + name + "'"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Any text that fails to parse. Carries the offending span.
class SyntaxError : public Error {
 public:
  SyntaxError(SourceSpan span, const std::string& message)
      : Error(std::to_string(span.line) + ":" + std::to_string(span.column) + ": " + message),
        span_(span),
        message_(message) {}
  const SourceSpan& span() const noexcept { return span_; }
  const std::string& message() const noexcept { return message_; }

 private:
  SourceSpan span_;
  std::string message_;
};

class DuplicateName : public SyntaxError {
 public:
  using SyntaxError::SyntaxError;
};

class UnknownIdentifier : public SyntaxError {
 public:
  using SyntaxError::SyntaxError;
};

class BoundOutOfRange : public SyntaxError {
 public:
  using SyntaxError::SyntaxError;
};

// model-core
class ModelError : public Error {
 public:
  using Error::Error;
};

class OverlappingGuards : public ModelError {
 public:
  using ModelError::ModelError;
};

class Deadlock : public ModelError {
 public:
  using ModelError::ModelError;
};

class MalformedDistribution : public ModelError {
 public:
  using ModelError::ModelError;
};

class UnboundConstant : public ModelError {
 public:
  using ModelError::ModelError;
};

class VariableOutOfRange : public ModelError {
 public:
  using ModelError::ModelError;
};

// engine
class EliminationBlowup : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

// learner
class TimeRegression : public Error {
 public:
  using Error::Error;
};

class MissingBelief : public Error {
 public:
  using Error::Error;
};

// monitor
class StaleCache : public Error {
 public:
  using Error::Error;
};

}  // namespace pdtmc
