#pragma once

#include <array>

#include "dmt/grid.hpp"
#include "dmt/tensor.hpp"

namespace dmt {

/// 2 x 3 affine map on pixel coordinates (x = column, y = row):
///   x' = m[0] x + m[1] y + m[2]
///   y' = m[3] x + m[4] y + m[5]
struct AffineMatrix {
  std::array<double, 6> m{1, 0, 0, 0, 1, 0};

  static AffineMatrix identity() { return {}; }
  /// Counter-clockwise on screen (y down) by `degrees` about (cx, cy).
  static AffineMatrix rotation(double degrees, double cx, double cy);
  static AffineMatrix translation(double dx, double dy);
  static AffineMatrix scaling(double sx, double sy, double cx, double cy);
  /// x' = x + k (y - cy)
  static AffineMatrix shear(double k, double cy);

  double determinant() const noexcept { return m[0] * m[4] - m[1] * m[3]; }
  bool invertible() const noexcept;
  /// Throws ConfigError when |det| <= 1e-6.
  AffineMatrix inverse() const;
  /// (*this)(other(p))
  AffineMatrix after(const AffineMatrix& other) const noexcept;

  std::array<double, 2> apply(double x, double y) const noexcept {
    return {m[0] * x + m[1] * y + m[2], m[3] * x + m[4] * y + m[5]};
  }

  friend bool operator==(const AffineMatrix&, const AffineMatrix&) = default;
};

/// dst(p) = src(forward^-1 p), bilinear, zero outside the source.
Tensor warp_image(const Tensor& image, const AffineMatrix& forward);

/// dst(p) = src(round(forward^-1 p)), false outside the source.
BinaryMask warp_mask(const BinaryMask& mask, const AffineMatrix& forward);

/// Pixels p whose image round(forward p) falls inside an H x W plane.
BinaryMask valid_region(std::size_t height, std::size_t width, const AffineMatrix& forward);

}  // namespace dmt
