#include "dmt/attribution.hpp"

#include <algorithm>
#include <cmath>

#include "dmt/engine.hpp"
#include "dmt/error.hpp"

namespace dmt {

namespace {

constexpr float kZeroDiff = 1e-9f;

void check_unit_range(const Tensor& values, const char* what) {
  for (float v : values.values()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw ConfigError(std::string(what) + " baseline must lie in [0, 1]");
  }
}

Tensor rescale_relu(const Tensor& x, const Tensor& x_ref, const Tensor& multiplier) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float dx = x[i] - x_ref[i];
    float slope;
    if (std::abs(dx) < kZeroDiff) {
      slope = x[i] > 0.0f ? 1.0f : 0.0f;
    } else {
      const float dy = std::max(x[i], 0.0f) - std::max(x_ref[i], 0.0f);
      slope = std::clamp(dy / dx, 0.0f, 1.0f);
    }
    out[i] = multiplier[i] * slope;
  }
  return out;
}

}  // namespace

Baseline Baseline::dataset_mean(Tensor mean) {
  check_unit_range(mean, "dataset-mean");
  return Baseline(Kind::DatasetMean, std::move(mean));
}

Baseline Baseline::custom(Tensor values) {
  check_unit_range(values, "custom");
  return Baseline(Kind::Custom, std::move(values));
}

Tensor Baseline::resolve(const Shape& shape) const {
  if (kind_ == Kind::Zeros) return Tensor(shape);
  if (values_.shape() != shape) {
    throw ShapeError("baseline " + shape_to_string(values_.shape()) + " does not match input " + shape_to_string(shape));
  }
  return values_;
}

DeepLift::DeepLift(const Model& model, const Baseline& baseline)
    : model_(&model), baseline_(baseline.resolve(model.input_shape())), reference_(forward(model, baseline_)) {}

AttributionMap DeepLift::attribute(const Tensor& input, std::size_t cls) const {
  if (input.rank() != 3) throw ShapeError("attribution expects a (C, H, W) input");
  return attribute(input, forward(*model_, input), cls);
}

AttributionMap DeepLift::attribute(const Tensor& input, const Trace& actual, std::size_t cls) const {
  const Model& model = *model_;
  if (cls >= model.num_classes()) {
    throw ConfigError("class " + std::to_string(cls) + " out of range for " + std::to_string(model.num_classes()) +
                      " classes");
  }
  if (input.shape() != model.input_shape()) {
    throw ShapeError("attribution input " + shape_to_string(input.shape()) + " does not match the model input " +
                     shape_to_string(model.input_shape()));
  }

  AttributionMap map;
  map.target_class = cls;
  map.baseline = baseline_;
  map.input_logit = actual.logits()[cls];
  map.baseline_logit = reference_.logits()[cls];
  map.delta = map.input_logit - map.baseline_logit;

  const auto& layers = model.layers();
  Tensor multiplier({model.num_classes()});
  multiplier[cls] = 1.0f;
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (std::holds_alternative<ReLU>(layers[i])) {
      multiplier = rescale_relu(actual.activations[i], reference_.activations[i], multiplier);
    } else {
      multiplier = layer_backward(layers[i], actual.activations[i], model.shapes()[i + 1], multiplier);
    }
  }

  map.contributions = Tensor(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    map.contributions[i] = multiplier[i] * (input[i] - map.baseline[i]);
  }
  if (!map.contributions.all_finite()) throw NumericError("attribution produced non-finite contributions");

  const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
  map.scores = ScoreField(height, width);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) map.scores.at(y, x) += map.contributions.at(c, y, x);
    }
  }
  return map;
}

AttributionMap deeplift_attribute(const Model& model, const Tensor& input, std::size_t cls,
                                  const Baseline& baseline) {
  if (cls >= model.num_classes()) {
    throw ConfigError("class " + std::to_string(cls) + " out of range for " + std::to_string(model.num_classes()) +
                      " classes");
  }
  if (input.rank() != 3) throw ShapeError("attribution expects a (C, H, W) input");
  return DeepLift(model, baseline).attribute(input, cls);
}

double completeness_gap(const AttributionMap& map) {
  return std::abs(sum(map.contributions) - map.delta);
}

ScoreField positive_support(const AttributionMap& map) {
  ScoreField field = map.scores;
  for (auto& v : field.values()) v = std::max(v, 0.0f);
  return field;
}

}  // namespace dmt
