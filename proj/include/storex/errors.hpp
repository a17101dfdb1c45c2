#pragma once

#include <stdexcept>
#include <string>

namespace storex {

/// Invalid user-supplied parameter (sizes, probabilities, fractions).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Violated API precondition (shape mismatch, missing key, empty input).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Data that breaks a domain invariant (asymmetric adjacency, weight out of range).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file contents.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace storex
