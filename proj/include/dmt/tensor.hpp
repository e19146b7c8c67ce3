#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dmt {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;
std::string shape_to_string(const Shape& shape);

/// Dense row-major f32 array. Images are stored (C, H, W); layer outputs are
/// either (C, H, W) or flat (N).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  /// Throws ShapeError when the value count does not match the shape.
  Tensor(Shape shape, std::vector<float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<float> values() noexcept { return values_; }
  std::span<const float> values() const noexcept { return values_; }

  float& operator[](std::size_t i) noexcept { return values_[i]; }
  float operator[](std::size_t i) const noexcept { return values_[i]; }

  // (C, H, W) element access; only valid on rank-3 tensors.
  float& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return values_[(c * shape_[1] + y) * shape_[2] + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return values_[(c * shape_[1] + y) * shape_[2] + x];
  }

  Tensor reshaped(Shape shape) const;
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<float> values_;
};

double sum(const Tensor& t) noexcept;
float max_abs_difference(const Tensor& a, const Tensor& b);

}  // namespace dmt
