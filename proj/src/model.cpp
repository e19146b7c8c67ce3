#include "dmt/model.hpp"

#include "dmt/error.hpp"

namespace dmt {

Model::Model(Shape input_shape, std::vector<Layer> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("model has no layers");
  if (input_shape_.empty() || shape_size(input_shape_) == 0) {
    throw ShapeError("model input shape " + shape_to_string(input_shape_) + " is empty");
  }
  shapes_.reserve(layers_.size() + 1);
  shapes_.push_back(input_shape_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    validate_layer(layers_[i], i);
    shapes_.push_back(output_shape(layers_[i], shapes_.back(), i));
  }
  if (shapes_.back().size() != 1) {
    throw ShapeError("final layer must produce flat logits, got " + shape_to_string(shapes_.back()),
                     layers_.size() - 1);
  }
  num_classes_ = shapes_.back()[0];
}

bool Model::all_finite() const noexcept {
  for (const auto& layer : layers_) {
    if (const auto* conv = std::get_if<Conv2d>(&layer)) {
      if (!conv->weight.all_finite() || !conv->bias.all_finite()) return false;
    } else if (const auto* dense = std::get_if<Dense>(&layer)) {
      if (!dense->weight.all_finite() || !dense->bias.all_finite()) return false;
    }
  }
  return true;
}

}  // namespace dmt
