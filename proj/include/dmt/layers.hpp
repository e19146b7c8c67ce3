#pragma once

#include <cstddef>
#include <string_view>
#include <variant>

#include "dmt/tensor.hpp"

namespace dmt {

/// 2-D convolution. weight is (out, in, k, k); bias is (out).
struct Conv2d {
  Tensor weight;
  Tensor bias;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t kernel() const { return weight.dim(2); }
};

/// Fully connected layer over a flat input. weight is (out, in); bias is (out).
struct Dense {
  Tensor weight;
  Tensor bias;

  std::size_t out_features() const { return weight.dim(0); }
  std::size_t in_features() const { return weight.dim(1); }
};

struct ReLU {};

struct AvgPool {
  std::size_t kernel = 2;
  std::size_t stride = 2;
};

struct MaxPool {
  std::size_t kernel = 2;
  std::size_t stride = 2;
};

struct Flatten {};

using Layer = std::variant<Conv2d, Dense, ReLU, AvgPool, MaxPool, Flatten>;

enum class LayerKind { Conv2d, Dense, ReLU, AvgPool, MaxPool, Flatten };

LayerKind kind_of(const Layer& layer) noexcept;
std::string_view kind_name(LayerKind kind) noexcept;

/// Checks the layer's own parameters (weight ranks, bias length, stride).
/// Throws ShapeError tagged with `index`.
void validate_layer(const Layer& layer, std::size_t index);

/// Shape produced by `layer` for an input of `input` shape. Throws ShapeError
/// tagged with `index` when the input does not fit.
Shape output_shape(const Layer& layer, const Shape& input, std::size_t index);

}  // namespace dmt
