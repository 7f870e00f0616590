#pragma once

#include <stdexcept>
#include <string>

namespace lsvp {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid numeric argument (sigma <= 0, singular matrix, p outside range, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Barycenter requested for a function that vanishes on the whole grid.
class UndefinedBarycenterError : public Error {
 public:
  using Error::Error;
};

// Laplace transform of the zero function.
class TransformOfZeroError : public Error {
 public:
  using Error::Error;
};

// Heuristic dual window has empty intersection with the allowed window.
class DegenerateDualGridError : public Error {
 public:
  using Error::Error;
};

// Grid layout that cannot support the requested test (origin off grid, ...).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// Newton iteration hit max_iter without reaching either verdict.
class NonConvergedError : public Error {
 public:
  using Error::Error;
};

// Solver verdict and geometric support test disagree.
class DichotomyDisagreementError : public Error {
 public:
  using Error::Error;
};

// A theorem hypothesis that the caller must enforce was not met.
class HypothesisViolatedError : public Error {
 public:
  using Error::Error;
};

// Text input (serialized grid function) could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace lsvp
