#include "dmt/affine.hpp"

#include <cmath>
#include <numbers>

#include "dmt/error.hpp"

namespace dmt {

namespace {

constexpr double kSnap = 1e-6;

// Coordinates within kSnap of an integer are treated as exact so that
// right-angle rotations and integer shifts resample losslessly.
double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < kSnap ? r : v;
}

bool round_inside(double x, double y, std::size_t h, std::size_t w, long& ix, long& iy) {
  ix = std::lround(snap(x));
  iy = std::lround(snap(y));
  return ix >= 0 && iy >= 0 && ix < static_cast<long>(w) && iy < static_cast<long>(h);
}

}  // namespace

AffineMatrix AffineMatrix::rotation(double degrees, double cx, double cy) {
  const double rad = degrees * std::numbers::pi / 180.0;
  double c = std::cos(rad), s = std::sin(rad);
  c = std::abs(c) < 1e-15 ? 0.0 : c;
  s = std::abs(s) < 1e-15 ? 0.0 : s;
  // Screen rotation with y pointing down.
  return {{c, s, cx - c * cx - s * cy, -s, c, cy + s * cx - c * cy}};
}

AffineMatrix AffineMatrix::translation(double dx, double dy) { return {{1, 0, dx, 0, 1, dy}}; }

AffineMatrix AffineMatrix::scaling(double sx, double sy, double cx, double cy) {
  return {{sx, 0, cx - sx * cx, 0, sy, cy - sy * cy}};
}

AffineMatrix AffineMatrix::shear(double k, double cy) { return {{1, k, -k * cy, 0, 1, 0}}; }

bool AffineMatrix::invertible() const noexcept { return std::abs(determinant()) > 1e-6; }

AffineMatrix AffineMatrix::inverse() const {
  if (!invertible()) throw ConfigError("affine matrix is not invertible");
  const double det = determinant();
  const double a = m[4] / det, b = -m[1] / det, d = -m[3] / det, e = m[0] / det;
  return {{a, b, -(a * m[2] + b * m[5]), d, e, -(d * m[2] + e * m[5])}};
}

AffineMatrix AffineMatrix::after(const AffineMatrix& o) const noexcept {
  return {{m[0] * o.m[0] + m[1] * o.m[3], m[0] * o.m[1] + m[1] * o.m[4], m[0] * o.m[2] + m[1] * o.m[5] + m[2],
           m[3] * o.m[0] + m[4] * o.m[3], m[3] * o.m[1] + m[4] * o.m[4], m[3] * o.m[2] + m[4] * o.m[5] + m[5]}};
}

Tensor warp_image(const Tensor& image, const AffineMatrix& forward) {
  if (image.rank() != 3) throw ShapeError("warp expects a (C, H, W) image");
  const AffineMatrix back = forward.inverse();
  const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor out(image.shape());
  auto sample = [&](std::size_t c, long y, long x) -> float {
    if (x < 0 || y < 0 || x >= static_cast<long>(w) || y >= static_cast<long>(h)) return 0.0f;
    return image.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      auto [sx, sy] = back.apply(static_cast<double>(x), static_cast<double>(y));
      sx = snap(sx);
      sy = snap(sy);
      const double fx = std::floor(sx), fy = std::floor(sy);
      const double ax = sx - fx, ay = sy - fy;
      const long x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
      for (std::size_t c = 0; c < channels; ++c) {
        double v = (1 - ax) * (1 - ay) * sample(c, y0, x0);
        if (ax > 0) v += ax * (1 - ay) * sample(c, y0, x0 + 1);
        if (ay > 0) v += (1 - ax) * ay * sample(c, y0 + 1, x0);
        if (ax > 0 && ay > 0) v += ax * ay * sample(c, y0 + 1, x0 + 1);
        out.at(c, y, x) = static_cast<float>(v);
      }
    }
  }
  return out;
}

BinaryMask warp_mask(const BinaryMask& mask, const AffineMatrix& forward) {
  const AffineMatrix back = forward.inverse();
  const std::size_t h = mask.height(), w = mask.width();
  BinaryMask out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const auto [sx, sy] = back.apply(static_cast<double>(x), static_cast<double>(y));
      long ix, iy;
      if (round_inside(sx, sy, h, w, ix, iy)) out.at(y, x) = mask.at(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
    }
  }
  return out;
}

BinaryMask valid_region(std::size_t height, std::size_t width, const AffineMatrix& forward) {
  BinaryMask out(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const auto [tx, ty] = forward.apply(static_cast<double>(x), static_cast<double>(y));
      long ix, iy;
      out.at(y, x) = round_inside(tx, ty, height, width, ix, iy) ? 1 : 0;
    }
  }
  return out;
}

}  // namespace dmt
