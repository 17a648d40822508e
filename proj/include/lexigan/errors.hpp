#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lexigan {

// Tensor shapes that cannot be combined (inner dims, kernel longer than input).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument values outside an operation's domain.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Calling an API in an unsupported way (e.g. backward on a non-scalar).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A file was readable but its contents are not in a supported layout.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file ended early or a chunk was malformed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values showed up during a training step.
class TrainingFault : public std::runtime_error {
 public:
  TrainingFault(std::uint64_t step, const std::string& what)
      : std::runtime_error("training fault at step " + std::to_string(step) + ": " + what),
        step_(step) {}

  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t step_;
};

}  // namespace lexigan
