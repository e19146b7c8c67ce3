#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dmt {

/// Broad failure class. The CLI maps each category onto its own exit code.
enum class ErrorCategory {
  Config,   // bad parameters, unknown options, out-of-range settings
  Data,     // malformed or missing files
  Numeric,  // non-finite values, degenerate math
  Shape,    // tensor/layer shape disagreement
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorCategory::Config, message) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message) : Error(ErrorCategory::Numeric, message) {}
};

/// Shape disagreement, optionally pinned to the offending layer.
class ShapeError : public Error {
 public:
  static constexpr std::size_t kNoLayer = static_cast<std::size_t>(-1);

  explicit ShapeError(const std::string& message, std::size_t layer = kNoLayer)
      : Error(ErrorCategory::Shape, layer == kNoLayer
                                        ? message
                                        : "layer " + std::to_string(layer) + ": " + message),
        layer_(layer) {}

  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

}  // namespace dmt
