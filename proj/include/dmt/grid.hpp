#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dmt {

/// Row-major H x W plane.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t height, std::size_t width, T fill = T{})
      : height_(height), width_(width), values_(height * width, fill) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool same_shape(const Grid& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  T& at(std::size_t y, std::size_t x) noexcept { return values_[y * width_ + x]; }
  const T& at(std::size_t y, std::size_t x) const noexcept { return values_[y * width_ + x]; }
  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> values_;
};

/// Per-pixel score plane (attribution scores summed over channels).
using ScoreField = Grid<float>;

/// Boolean plane stored as bytes (0 / 1); true marks a supporting pixel.
using BinaryMask = Grid<std::uint8_t>;

inline std::size_t count(const BinaryMask& mask) noexcept {
  std::size_t n = 0;
  for (auto v : mask.values()) n += v ? 1 : 0;
  return n;
}

inline BinaryMask complement(const BinaryMask& mask) {
  BinaryMask out(mask.height(), mask.width());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 0 : 1;
  return out;
}

}  // namespace dmt
