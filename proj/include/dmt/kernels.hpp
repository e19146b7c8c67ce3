#pragma once

// Inner loops of the engine and the morphology stage.
//
// dmt::kernels holds the OpenMP versions used by the pipeline. Every parallel
// loop writes disjoint outputs and sums each output in a fixed order, so
// results are bit-identical for any thread count.
//
// dmt::kernels::serial holds straightforward single-threaded versions written
// in a different loop order (scatter instead of gather, direct window instead
// of separable passes). They exist for tests and the benchmark only.

#include <cstddef>
#include <cstdint>
#include <span>

namespace dmt::kernels {

struct ConvGeometry {
  std::size_t in_channels = 0;
  std::size_t in_height = 0;
  std::size_t in_width = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_height() const noexcept { return (in_height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_width() const noexcept { return (in_width + 2 * padding - kernel) / stride + 1; }
};

struct PoolGeometry {
  std::size_t channels = 0;
  std::size_t in_height = 0;
  std::size_t in_width = 0;
  std::size_t kernel = 2;
  std::size_t stride = 2;

  std::size_t out_height() const noexcept { return (in_height - kernel) / stride + 1; }
  std::size_t out_width() const noexcept { return (in_width - kernel) / stride + 1; }
};

struct MorphGeometry {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t kernel = 3;  // odd side of the all-ones square window
};

enum class MorphOp { Erode, Dilate };

void conv2d_forward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output);
void conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                           std::span<const float> weight, std::span<float> grad_input);

void dense_forward(std::size_t in, std::size_t out, std::span<const float> input, std::span<const float> weight,
                   std::span<const float> bias, std::span<float> output);
void dense_backward_input(std::size_t in, std::size_t out, std::span<const float> grad_output,
                          std::span<const float> weight, std::span<float> grad_input);

void avgpool_forward(const PoolGeometry& g, std::span<const float> input, std::span<float> output);
void avgpool_backward(const PoolGeometry& g, std::span<const float> grad_output, std::span<float> grad_input);

void maxpool_forward(const PoolGeometry& g, std::span<const float> input, std::span<float> output);
/// Routes each window's gradient to the first maximal input of that window.
void maxpool_backward(const PoolGeometry& g, std::span<const float> input, std::span<const float> grad_output,
                      std::span<float> grad_input);

/// Square all-ones erosion or dilation. Pixels outside the plane read as
/// `outside` (0 or 1).
void morph(MorphOp op, const MorphGeometry& g, std::uint8_t outside, std::span<const std::uint8_t> input,
           std::span<std::uint8_t> output);

namespace serial {

void conv2d_forward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output);
void conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                           std::span<const float> weight, std::span<float> grad_input);
void dense_forward(std::size_t in, std::size_t out, std::span<const float> input, std::span<const float> weight,
                   std::span<const float> bias, std::span<float> output);
void dense_backward_input(std::size_t in, std::size_t out, std::span<const float> grad_output,
                          std::span<const float> weight, std::span<float> grad_input);
void avgpool_forward(const PoolGeometry& g, std::span<const float> input, std::span<float> output);
void avgpool_backward(const PoolGeometry& g, std::span<const float> grad_output, std::span<float> grad_input);
void maxpool_forward(const PoolGeometry& g, std::span<const float> input, std::span<float> output);
void maxpool_backward(const PoolGeometry& g, std::span<const float> input, std::span<const float> grad_output,
                      std::span<float> grad_input);
void morph(MorphOp op, const MorphGeometry& g, std::uint8_t outside, std::span<const std::uint8_t> input,
           std::span<std::uint8_t> output);

}  // namespace serial

}  // namespace dmt::kernels
