#include "dmt/layers.hpp"

#include "dmt/error.hpp"

namespace dmt {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Shape pooled(const Shape& input, std::size_t kernel, std::size_t stride, std::size_t index) {
  if (input.size() != 3) throw ShapeError("pooling expects (C, H, W), got " + shape_to_string(input), index);
  if (input[1] < kernel || input[2] < kernel) {
    throw ShapeError("pool window " + std::to_string(kernel) + " larger than input " + shape_to_string(input), index);
  }
  return {input[0], (input[1] - kernel) / stride + 1, (input[2] - kernel) / stride + 1};
}

void check_pool(std::size_t kernel, std::size_t stride, std::size_t index) {
  if (kernel == 0) throw ShapeError("pool kernel must be >= 1", index);
  if (stride == 0) throw ShapeError("pool stride must be >= 1", index);
}

}  // namespace

LayerKind kind_of(const Layer& layer) noexcept {
  return static_cast<LayerKind>(layer.index());
}

std::string_view kind_name(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Dense: return "dense";
    case LayerKind::ReLU: return "relu";
    case LayerKind::AvgPool: return "avgpool";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Flatten: return "flatten";
  }
  return "unknown";
}

void validate_layer(const Layer& layer, std::size_t index) {
  std::visit(Overloaded{
                 [&](const Conv2d& conv) {
                   if (conv.weight.rank() != 4) throw ShapeError("conv2d weight must be rank 4", index);
                   if (conv.weight.dim(2) != conv.weight.dim(3)) throw ShapeError("conv2d kernel must be square", index);
                   if (conv.weight.dim(0) == 0 || conv.weight.dim(1) == 0 || conv.weight.dim(2) == 0) {
                     throw ShapeError("conv2d weight has a zero dimension", index);
                   }
                   if (conv.bias.shape() != Shape{conv.out_channels()}) {
                     throw ShapeError("conv2d bias must be (" + std::to_string(conv.out_channels()) + ")", index);
                   }
                   if (conv.stride == 0) throw ShapeError("conv2d stride must be >= 1", index);
                 },
                 [&](const Dense& dense) {
                   if (dense.weight.rank() != 2) throw ShapeError("dense weight must be rank 2", index);
                   if (dense.weight.dim(0) == 0 || dense.weight.dim(1) == 0) {
                     throw ShapeError("dense weight has a zero dimension", index);
                   }
                   if (dense.bias.shape() != Shape{dense.out_features()}) {
                     throw ShapeError("dense bias must be (" + std::to_string(dense.out_features()) + ")", index);
                   }
                 },
                 [&](const AvgPool& pool) { check_pool(pool.kernel, pool.stride, index); },
                 [&](const MaxPool& pool) { check_pool(pool.kernel, pool.stride, index); },
                 [](const auto&) {},
             },
             layer);
}

Shape output_shape(const Layer& layer, const Shape& input, std::size_t index) {
  return std::visit(
      Overloaded{
          [&](const Conv2d& conv) -> Shape {
            if (input.size() != 3) throw ShapeError("conv2d expects (C, H, W), got " + shape_to_string(input), index);
            if (input[0] != conv.in_channels()) {
              throw ShapeError("conv2d expects " + std::to_string(conv.in_channels()) + " channels, got " +
                                   shape_to_string(input),
                               index);
            }
            const std::size_t k = conv.kernel();
            const std::size_t h = input[1] + 2 * conv.padding;
            const std::size_t w = input[2] + 2 * conv.padding;
            if (h < k || w < k) throw ShapeError("conv2d kernel larger than padded input", index);
            return {conv.out_channels(), (h - k) / conv.stride + 1, (w - k) / conv.stride + 1};
          },
          [&](const Dense& dense) -> Shape {
            if (input.size() != 1 || input[0] != dense.in_features()) {
              throw ShapeError("dense expects (" + std::to_string(dense.in_features()) + "), got " +
                                   shape_to_string(input),
                               index);
            }
            return {dense.out_features()};
          },
          [&](const ReLU&) -> Shape { return input; },
          [&](const AvgPool& pool) -> Shape { return pooled(input, pool.kernel, pool.stride, index); },
          [&](const MaxPool& pool) -> Shape { return pooled(input, pool.kernel, pool.stride, index); },
          [&](const Flatten&) -> Shape { return {shape_size(input)}; },
      },
      layer);
}

}  // namespace dmt
