#pragma once

#include <cstddef>
#include <vector>

#include "dmt/layers.hpp"
#include "dmt/tensor.hpp"

namespace dmt {

/// Sequential classifier. Immutable once constructed, so one instance can be
/// shared by concurrent inference calls.
class Model {
 public:
  /// Validates every layer and the shape chain; the last layer must emit a
  /// flat vector whose length becomes the class count.
  Model(Shape input_shape, std::vector<Layer> layers);

  const Shape& input_shape() const noexcept { return input_shape_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::size_t num_classes() const noexcept { return num_classes_; }

  /// shapes()[k] is the input shape of layer k; shapes().back() the logits shape.
  const std::vector<Shape>& shapes() const noexcept { return shapes_; }

  bool all_finite() const noexcept;

 private:
  Shape input_shape_;
  std::vector<Layer> layers_;
  std::vector<Shape> shapes_;
  std::size_t num_classes_ = 0;
};

}  // namespace dmt
