#pragma once

#include <stdexcept>
#include <string>

namespace nuce {

/// Operand shapes do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration value is outside its allowed range or cannot be parsed.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The data itself cannot support the requested operation (empty class,
/// too few groups, zero ground truth, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for values that break a type invariant (non-finite entries,
/// degenerate boxes).
class ValueError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An input file (detections, model, config) is malformed.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nuce
