#pragma once

#include <cstddef>

#include "dmt/engine.hpp"
#include "dmt/grid.hpp"
#include "dmt/model.hpp"
#include "dmt/tensor.hpp"

namespace dmt {

/// Reference ("empty") input that contributions are measured against.
class Baseline {
 public:
  enum class Kind { Zeros, DatasetMean, Custom };

  static Baseline zeros() { return Baseline(Kind::Zeros, {}); }
  /// Throws ConfigError unless every value lies in [0, 1].
  static Baseline dataset_mean(Tensor mean);
  static Baseline custom(Tensor values);

  Kind kind() const noexcept { return kind_; }
  /// Materialises the baseline for an input of `shape`.
  Tensor resolve(const Shape& shape) const;

 private:
  Baseline(Kind kind, Tensor values) : kind_(kind), values_(std::move(values)) {}

  Kind kind_;
  Tensor values_;
};

struct AttributionMap {
  Tensor contributions;  // per input element, input shape
  ScoreField scores;     // contributions summed over channels, H x W
  std::size_t target_class = 0;
  double input_logit = 0.0;
  double baseline_logit = 0.0;
  double delta = 0.0;  // input_logit - baseline_logit
  Tensor baseline;
};

/// Rescale-rule DeepLIFT contributions of `input` to logit `cls`.
///
/// Multipliers flow backwards through the layers: conv, dense, avgpool and
/// flatten use their exact linear transpose; ReLU scales by dy/dx between the
/// input and baseline activations, falling back to the local gradient when
/// |dx| < 1e-9; maxpool routes to the window argmax of the input activation.
/// Without maxpool the contributions sum to `delta`.
AttributionMap deeplift_attribute(const Model& model, const Tensor& input, std::size_t cls,
                                  const Baseline& baseline);

/// The same attribution against one fixed baseline. The baseline's forward
/// pass runs once at construction and is reused by every call.
class DeepLift {
 public:
  /// Throws ShapeError when the baseline does not fit the model's input.
  DeepLift(const Model& model, const Baseline& baseline);

  AttributionMap attribute(const Tensor& input, std::size_t cls) const;
  /// Reuses `trace`, which must be forward(model, input).
  AttributionMap attribute(const Tensor& input, const Trace& trace, std::size_t cls) const;

  const Tensor& baseline() const noexcept { return baseline_; }

 private:
  const Model* model_;
  Tensor baseline_;
  Trace reference_;
};

/// |sum(contributions) - delta|, summed in double.
double completeness_gap(const AttributionMap& map);

/// Scores with negatives clamped to zero.
ScoreField positive_support(const AttributionMap& map);

}  // namespace dmt
