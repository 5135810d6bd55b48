#pragma once

#include <stdexcept>
#include <string>

namespace neckspec {

// Exit code 2 in the CLI maps to ConfigError and ParseError.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct MatchingError : std::runtime_error {
  MatchingError() : std::runtime_error("matching condition violated") {}
  explicit MatchingError(const std::string& what) : std::runtime_error(what) {}
};

struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Unsupported : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Characteristic system rank fell below the value recorded at the reference T.
struct DegenerateT : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotOrthogonal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoContraction : std::runtime_error {
  double eta;
  NoContraction(const std::string& what, double eta_) : std::runtime_error(what), eta(eta_) {}
};

struct InsufficientEigenvalues : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace neckspec
