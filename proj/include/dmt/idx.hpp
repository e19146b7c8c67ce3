#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dmt/error.hpp"
#include "dmt/tensor.hpp"

namespace dmt {

/// A test image with pixels (C, H, W) in [0, 1].
struct ImageRecord {
  Tensor pixels;
  std::string source_id;
  std::optional<std::size_t> label;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error(ErrorCategory::Data, message) {}
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
inline constexpr std::uint32_t kIdxFloatMatrixMagic = 0x00000D02;

/// unsigned-byte rank-3 IDX; every byte is divided by 255.
std::vector<ImageRecord> parse_idx_images(std::string_view bytes, std::string_view source);
std::vector<std::size_t> parse_idx_labels(std::string_view bytes);
/// Rank-2 IDX with big-endian f32 payload (type code 0x0D). Returns rows.
std::vector<std::vector<float>> parse_idx_floats(std::string_view bytes);

std::vector<ImageRecord> load_idx_images(const std::filesystem::path& path);
std::vector<std::size_t> load_idx_labels(const std::filesystem::path& path);
std::vector<std::vector<float>> load_idx_floats(const std::filesystem::path& path);

/// Loads images and attaches labels; throws DataError when the counts differ.
std::vector<ImageRecord> load_idx_dataset(const std::filesystem::path& images,
                                          const std::filesystem::path& labels);

/// Writes single-channel images as rank-3 IDX, quantising round(v * 255).
std::string serialize_idx_images(const std::vector<ImageRecord>& records);
std::string serialize_idx_labels(const std::vector<std::size_t>& labels);
void save_idx_images(const std::vector<ImageRecord>& records, const std::filesystem::path& path);
void save_idx_labels(const std::vector<std::size_t>& labels, const std::filesystem::path& path);

/// Per-pixel mean of a non-empty record set.
Tensor mean_image(const std::vector<ImageRecord>& records);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace dmt
