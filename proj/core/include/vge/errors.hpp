// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace vge {

/// Incompatible tensor shapes passed to a primitive. The message carries
/// both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A primitive id that the engine does not implement.
class UnsupportedPrimitive : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A violated API precondition (non-scalar loss, k > K, V = 0, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed input data; line() is 1-based when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_ = 0;
};

/// Loading or windowing produced no usable scenes.
class EmptyDataset : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Effective resistance requested between nodes in different components.
class DisconnectedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values where finite ones are required (NaN loss abort).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::string diagnostic = {})
      : std::runtime_error(what), diagnostic_(std::move(diagnostic)) {}
  const std::string& diagnostic() const { return diagnostic_; }

 private:
  std::string diagnostic_;
};

}  // namespace vge
