#include "dmt/pnm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "dmt/idx.hpp"

namespace dmt {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t number() {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (++digits > 7) throw DataError("pnm: header number too large");
      ++pos_;
    }
    if (digits == 0) throw DataError("pnm: malformed header");
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw DataError("pnm: missing whitespace before raster");
    }
    return pos_ + 1;
  }

  void skip(std::size_t n) { pos_ += n; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

Tensor parse_binary(std::string_view bytes, std::size_t channels) {
  const std::string_view magic = channels == 1 ? "P5" : "P6";
  if (bytes.substr(0, 2) != magic) throw DataError("pnm: expected " + std::string(magic) + " magic");
  HeaderReader header(bytes);
  header.skip(2);
  const std::size_t width = header.number(), height = header.number(), maxval = header.number();
  if (width == 0 || height == 0) throw DataError("pnm: zero-sized image");
  if (maxval != 255) throw DataError("pnm: unsupported maxval " + std::to_string(maxval) + " (only 255)");
  const std::size_t start = header.raster_start();
  const std::size_t expected = width * height * channels;
  if (bytes.size() < start || bytes.size() - start != expected) {
    throw DataError("pnm: raster has " + std::to_string(bytes.size() >= start ? bytes.size() - start : 0) +
                    " bytes, expected " + std::to_string(expected));
  }
  Tensor image({channels, height, width});
  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + start);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        image.at(c, y, x) = static_cast<float>(raster[(y * width + x) * channels + c]) / 255.0f;
      }
    }
  }
  return image;
}

std::string serialize_binary(const Tensor& image, std::size_t channels) {
  if (image.rank() != 3 || image.dim(0) != channels) {
    throw DataError("pnm: expected (" + std::to_string(channels) + ", H, W), got " + shape_to_string(image.shape()));
  }
  const std::size_t height = image.dim(1), width = image.dim(2);
  std::string out = (channels == 1 ? "P5\n" : "P6\n") + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.reserve(out.size() + image.size());
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        const float v = std::clamp(image.at(c, y, x), 0.0f, 1.0f);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
      }
    }
  }
  return out;
}

}  // namespace

Tensor parse_pgm(std::string_view bytes) { return parse_binary(bytes, 1); }
Tensor parse_ppm(std::string_view bytes) { return parse_binary(bytes, 3); }

Tensor parse_pnm(std::string_view bytes) {
  if (bytes.substr(0, 2) == "P5") return parse_pgm(bytes);
  if (bytes.substr(0, 2) == "P6") return parse_ppm(bytes);
  throw DataError("pnm: unsupported format (binary P5/P6 only)");
}

std::string serialize_pgm(const Tensor& gray) { return serialize_binary(gray, 1); }
std::string serialize_ppm(const Tensor& rgb) { return serialize_binary(rgb, 3); }

Tensor load_pgm(const std::filesystem::path& path) { return parse_pgm(read_file(path)); }
Tensor load_ppm(const std::filesystem::path& path) { return parse_ppm(read_file(path)); }
Tensor load_pnm(const std::filesystem::path& path) { return parse_pnm(read_file(path)); }
void save_pgm(const Tensor& gray, const std::filesystem::path& path) { write_file(path, serialize_pgm(gray)); }
void save_ppm(const Tensor& rgb, const std::filesystem::path& path) { write_file(path, serialize_ppm(rgb)); }

void save_pnm(const Tensor& image, const std::filesystem::path& path) {
  if (image.rank() == 3 && image.dim(0) == 3) {
    save_ppm(image, path);
  } else {
    save_pgm(image, path);
  }
}

Tensor mask_to_image(const BinaryMask& mask) {
  Tensor image({1, mask.height(), mask.width()});
  for (std::size_t i = 0; i < mask.size(); ++i) image[i] = mask[i] ? 1.0f : 0.0f;
  return image;
}

void save_mask_pgm(const BinaryMask& mask, const std::filesystem::path& path) {
  save_pgm(mask_to_image(mask), path);
}

void save_field_pgm(const ScoreField& field, const std::filesystem::path& path) {
  Tensor image({1, field.height(), field.width()});
  if (field.size() > 0) {
    const auto [lo, hi] = std::minmax_element(field.values().begin(), field.values().end());
    const float span = *hi - *lo;
    for (std::size_t i = 0; i < field.size(); ++i) image[i] = span > 0.0f ? (field[i] - *lo) / span : 0.0f;
  }
  save_pgm(image, path);
}

}  // namespace dmt
