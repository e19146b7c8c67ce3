#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "dmt/grid.hpp"
#include "dmt/tensor.hpp"

namespace dmt {

// Binary Netpbm: P5 (gray, C = 1) and P6 (RGB, C = 3), maxval 255 only.
// Pixels map to [0, 1] by /255 on load and round(v * 255) on save, so 8-bit
// images survive a load/save cycle byte for byte. Both loaders throw DataError.

Tensor parse_pgm(std::string_view bytes);
Tensor parse_ppm(std::string_view bytes);
/// Accepts either P5 or P6.
Tensor parse_pnm(std::string_view bytes);

std::string serialize_pgm(const Tensor& gray);
std::string serialize_ppm(const Tensor& rgb);

Tensor load_pgm(const std::filesystem::path& path);
Tensor load_ppm(const std::filesystem::path& path);
Tensor load_pnm(const std::filesystem::path& path);
void save_pgm(const Tensor& gray, const std::filesystem::path& path);
void save_ppm(const Tensor& rgb, const std::filesystem::path& path);
/// Saves (C, H, W) as P5 or P6 depending on C.
void save_pnm(const Tensor& image, const std::filesystem::path& path);

/// true -> 255, false -> 0.
void save_mask_pgm(const BinaryMask& mask, const std::filesystem::path& path);
/// Linear rescale of [min, max] onto [0, 255]; constant fields become 0.
void save_field_pgm(const ScoreField& field, const std::filesystem::path& path);

Tensor mask_to_image(const BinaryMask& mask);

}  // namespace dmt
