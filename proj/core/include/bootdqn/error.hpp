#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bootdqn {

// Every failure the library raises derives from Error. kind() is a stable
// machine-readable tag used by the CLI's JSON error report.
class Error : public std::runtime_error {
 public:
  Error(std::string_view kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Shapes, layouts or hyperparameters that cannot describe a valid object.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config_error", what) {}
};

// Data that is well-shaped but unusable (NaN features, ...).
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error("input_error", what) {}
};

// API called in the wrong state or with out-of-range indices.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("usage_error", what) {}
};

// Non-finite values produced during learning.
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error("training_error", what) {}
};

class CalibrationError : public Error {
 public:
  explicit CalibrationError(const std::string& what) : Error("calibration_error", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io_error", what) {}
};

}  // namespace bootdqn
