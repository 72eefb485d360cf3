#pragma once

#include <stdexcept>
#include <string>

namespace fairval {

/// Invalid parameters, inconsistent settings, family mismatches.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration that is well-formed but not supported (e.g. a family
/// without a closed form for the requested quantity).
class UnsupportedError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Malformed or inconsistent data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

/// Factorization failures and other floating-point breakdowns.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fairval
