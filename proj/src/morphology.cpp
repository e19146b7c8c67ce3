#include "dmt/morphology.hpp"

#include <string>

#include "dmt/error.hpp"
#include "dmt/kernels.hpp"

namespace dmt {

namespace {

void check_kernel(std::size_t kernel) {
  if (kernel == 0 || kernel % 2 == 0) {
    throw ConfigError("morphology kernel must be odd and positive, got " + std::to_string(kernel));
  }
}

BinaryMask apply(kernels::MorphOp op, const BinaryMask& mask, std::size_t kernel, Border border) {
  check_kernel(kernel);
  BinaryMask out(mask.height(), mask.width());
  const std::uint8_t outside = (op == kernels::MorphOp::Erode && border == Border::Ignore) ? 1 : 0;
  kernels::morph(op, {mask.height(), mask.width(), kernel}, outside, mask.values(), out.values());
  return out;
}

}  // namespace

BinaryMask erosion(const BinaryMask& mask, std::size_t kernel, Border border) {
  return apply(kernels::MorphOp::Erode, mask, kernel, border);
}

BinaryMask dilation(const BinaryMask& mask, std::size_t kernel, Border border) {
  return apply(kernels::MorphOp::Dilate, mask, kernel, border);
}

BinaryMask closing(const BinaryMask& mask, std::size_t kernel, Border border) {
  return erosion(dilation(mask, kernel, border), kernel, border);
}

BinaryMask opening(const BinaryMask& mask, std::size_t kernel, Border border) {
  return dilation(erosion(mask, kernel, border), kernel, border);
}

}  // namespace dmt
