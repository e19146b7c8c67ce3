#include "dmt/idx.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dmt {

namespace {

std::uint32_t read_be32(std::string_view bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) throw DataError("idx: header truncated");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

void append_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void expect_magic(std::string_view bytes, std::uint32_t magic) {
  const std::uint32_t found = read_be32(bytes, 0);
  if (found != magic) {
    std::ostringstream msg;
    msg << "idx: bad magic 0x" << std::hex << found << ", expected 0x" << magic;
    throw DataError(msg.str());
  }
}

void expect_payload(std::string_view bytes, std::size_t header, std::size_t payload) {
  if (bytes.size() - header != payload) {
    throw DataError("idx: payload is " + std::to_string(bytes.size() - header) + " bytes, header declares " +
                    std::to_string(payload));
  }
}

}  // namespace

std::vector<ImageRecord> parse_idx_images(std::string_view bytes, std::string_view source) {
  expect_magic(bytes, kIdxImagesMagic);
  const std::size_t count = read_be32(bytes, 4), rows = read_be32(bytes, 8), cols = read_be32(bytes, 12);
  if (rows == 0 || cols == 0 || rows > 65536 || cols > 65536) throw DataError("idx: implausible image size");
  const std::size_t plane = rows * cols;
  if (count > (bytes.size() / plane) + 1) throw DataError("idx: image count exceeds payload");
  expect_payload(bytes, 16, count * plane);

  std::vector<ImageRecord> records;
  records.reserve(count);
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + 16);
  for (std::size_t n = 0; n < count; ++n) {
    Tensor pixels({1, rows, cols});
    for (std::size_t i = 0; i < plane; ++i) pixels[i] = static_cast<float>(data[n * plane + i]) / 255.0f;
    records.push_back({std::move(pixels), std::string(source) + "#" + std::to_string(n), std::nullopt});
  }
  return records;
}

std::vector<std::size_t> parse_idx_labels(std::string_view bytes) {
  expect_magic(bytes, kIdxLabelsMagic);
  const std::size_t count = read_be32(bytes, 4);
  expect_payload(bytes, 8, count);
  std::vector<std::size_t> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<unsigned char>(bytes[8 + i]);
  return labels;
}

std::vector<std::vector<float>> parse_idx_floats(std::string_view bytes) {
  expect_magic(bytes, kIdxFloatMatrixMagic);
  const std::size_t rows = read_be32(bytes, 4), cols = read_be32(bytes, 8);
  if (cols == 0 || cols > (1u << 20)) throw DataError("idx: implausible column count");
  if (rows > bytes.size() / (4 * cols) + 1) throw DataError("idx: row count exceeds payload");
  expect_payload(bytes, 12, rows * cols * 4);
  std::vector<std::vector<float>> out(rows, std::vector<float>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r][c] = std::bit_cast<float>(read_be32(bytes, 12 + 4 * (r * cols + c)));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

std::vector<ImageRecord> load_idx_images(const std::filesystem::path& path) {
  return parse_idx_images(read_file(path), path.filename().string());
}

std::vector<std::size_t> load_idx_labels(const std::filesystem::path& path) {
  return parse_idx_labels(read_file(path));
}

std::vector<std::vector<float>> load_idx_floats(const std::filesystem::path& path) {
  return parse_idx_floats(read_file(path));
}

std::vector<ImageRecord> load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels) {
  auto records = load_idx_images(images);
  const auto values = load_idx_labels(labels);
  if (values.size() != records.size()) {
    throw DataError("idx: " + std::to_string(records.size()) + " images but " + std::to_string(values.size()) +
                    " labels");
  }
  for (std::size_t i = 0; i < records.size(); ++i) records[i].label = values[i];
  return records;
}

std::string serialize_idx_images(const std::vector<ImageRecord>& records) {
  std::size_t rows = 0, cols = 0;
  if (!records.empty()) {
    const auto& shape = records.front().pixels.shape();
    if (shape.size() != 3 || shape[0] != 1) throw DataError("idx: only single-channel images can be written");
    rows = shape[1];
    cols = shape[2];
  }
  std::string out;
  append_be32(out, kIdxImagesMagic);
  append_be32(out, static_cast<std::uint32_t>(records.size()));
  append_be32(out, static_cast<std::uint32_t>(rows));
  append_be32(out, static_cast<std::uint32_t>(cols));
  for (const auto& r : records) {
    if (r.pixels.shape() != Shape{1, rows, cols}) throw DataError("idx: images differ in shape");
    for (float v : r.pixels.values()) {
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f))));
    }
  }
  return out;
}

std::string serialize_idx_labels(const std::vector<std::size_t>& labels) {
  std::string out;
  append_be32(out, kIdxLabelsMagic);
  append_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (auto l : labels) {
    if (l > 255) throw DataError("idx: label " + std::to_string(l) + " does not fit a byte");
    out.push_back(static_cast<char>(l));
  }
  return out;
}

void save_idx_images(const std::vector<ImageRecord>& records, const std::filesystem::path& path) {
  write_file(path, serialize_idx_images(records));
}

void save_idx_labels(const std::vector<std::size_t>& labels, const std::filesystem::path& path) {
  write_file(path, serialize_idx_labels(labels));
}

Tensor mean_image(const std::vector<ImageRecord>& records) {
  if (records.empty()) throw DataError("mean of an empty dataset");
  const Shape shape = records.front().pixels.shape();
  std::vector<double> acc(shape_size(shape), 0.0);
  for (const auto& r : records) {
    if (r.pixels.shape() != shape) throw DataError("dataset images differ in shape");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += r.pixels[i];
  }
  Tensor mean(shape);
  for (std::size_t i = 0; i < acc.size(); ++i) mean[i] = static_cast<float>(acc[i] / records.size());
  return mean;
}

}  // namespace dmt
