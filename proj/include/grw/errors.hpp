#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace grw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class UnitError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "unit_error"; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain_error"; }
};

class UsageError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "usage_error"; }
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const char* kind() const noexcept override { return "parse_error"; }

 private:
  std::size_t line_;
};

// Quadrature or fit failed to reach the requested accuracy.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double achieved_tolerance)
      : Error(what), achieved_(achieved_tolerance) {}
  double achieved_tolerance() const noexcept { return achieved_; }
  const char* kind() const noexcept override { return "numerical_error"; }

 private:
  double achieved_;
};

// A density-grid invariant (trace, Hermiticity, positivity) drifted past tolerance.
class InvariantError : public Error {
 public:
  InvariantError(const std::string& what, long step, double drift)
      : Error(what + " (step " + std::to_string(step) + ", drift " + std::to_string(drift) + ")"),
        step_(step),
        drift_(drift) {}
  long step() const noexcept { return step_; }
  double drift() const noexcept { return drift_; }
  const char* kind() const noexcept override { return "invariant_error"; }

 private:
  long step_;
  double drift_;
};

class EnsembleLimitError : public Error {
 public:
  EnsembleLimitError(const std::string& what, std::size_t completed)
      : Error(what + " (" + std::to_string(completed) + " trajectories completed)"),
        completed_(completed) {}
  std::size_t completed() const noexcept { return completed_; }
  const char* kind() const noexcept override { return "resource_limit"; }

 private:
  std::size_t completed_;
};

}  // namespace grw
