#pragma once

#include <cstddef>

#include "dmt/grid.hpp"

namespace dmt {

/// How the k x k window treats pixels beyond the image edge.
enum class Border {
  /// Out-of-image pixels take no part: erosion reads them as true, dilation
  /// as false. Erosion/dilation stay exact duals and closing never shrinks
  /// the mask.
  Ignore,
  /// Out-of-image pixels read as false for both operations, so erosion also
  /// eats into regions touching the edge.
  Zero,
};

/// Throws ConfigError for an even or zero kernel.
BinaryMask erosion(const BinaryMask& mask, std::size_t kernel, Border border = Border::Ignore);
BinaryMask dilation(const BinaryMask& mask, std::size_t kernel, Border border = Border::Ignore);

/// erosion(dilation(mask)): fills holes and gaps narrower than the kernel.
BinaryMask closing(const BinaryMask& mask, std::size_t kernel, Border border = Border::Ignore);
/// dilation(erosion(mask)): drops specks smaller than the kernel.
BinaryMask opening(const BinaryMask& mask, std::size_t kernel, Border border = Border::Ignore);

}  // namespace dmt
