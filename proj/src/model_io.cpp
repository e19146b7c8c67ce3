#include "dmt/model_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace dmt {

namespace {

constexpr std::string_view kMagic = "dmt-model";
constexpr int kVersion = 1;
constexpr std::size_t kMaxManifestBytes = 1 << 20;
constexpr std::size_t kMaxDim = 1 << 24;

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ') ++pos;
    if (pos > start) words.push_back(line.substr(start, pos - start));
  }
  return words;
}

std::size_t parse_count(std::string_view word, std::string_view what) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
  if (ec != std::errc() || ptr != word.data() + word.size() || value > kMaxDim) {
    throw ModelIoError(ModelIoErrc::BadHeader, "bad " + std::string(what) + " '" + std::string(word) + "'");
  }
  return value;
}

void expect_word(const std::vector<std::string_view>& words, std::size_t i, std::string_view word) {
  if (i >= words.size() || words[i] != word) {
    throw ModelIoError(ModelIoErrc::BadHeader, "expected '" + std::string(word) + "'");
  }
}

struct ParamRef {
  std::size_t layer;
  std::string_view name;
  Tensor* tensor;
};

std::vector<ParamRef> parameters(std::vector<Layer>& layers) {
  std::vector<ParamRef> refs;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (auto* conv = std::get_if<Conv2d>(&layers[i])) {
      refs.push_back({i, "weight", &conv->weight});
      refs.push_back({i, "bias", &conv->bias});
    } else if (auto* dense = std::get_if<Dense>(&layers[i])) {
      refs.push_back({i, "weight", &dense->weight});
      refs.push_back({i, "bias", &dense->bias});
    }
  }
  return refs;
}

class LineReader {
 public:
  explicit LineReader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view next() {
    const std::size_t end = bytes_.find('\n', pos_);
    if (end == std::string_view::npos || end >= kMaxManifestBytes) {
      throw ModelIoError(ModelIoErrc::BadHeader, "manifest ended without 'end' line");
    }
    std::string_view line = bytes_.substr(pos_, end - pos_);
    pos_ = end + 1;
    for (char c : line) {
      if (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) > 0x7e) {
        throw ModelIoError(ModelIoErrc::BadHeader, "manifest contains non-printable bytes");
      }
    }
    return line;
  }

  std::size_t position() const noexcept { return pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

// Parameter tensors are allocated before the payload is checked, so cap
// their size to keep hostile manifests from exhausting memory.
Tensor parameter_tensor(Shape shape) {
  std::size_t total = 1;
  for (auto d : shape) {
    if (d != 0 && total > (std::size_t{1} << 28) / d) {
      throw ModelIoError(ModelIoErrc::BadHeader, "parameter tensor " + shape_to_string(shape) + " too large");
    }
    total *= d;
  }
  return Tensor(std::move(shape));
}

Layer parse_layer(const std::vector<std::string_view>& w) {
  if (w.empty()) throw ModelIoError(ModelIoErrc::BadHeader, "empty layer line");
  const auto kind = w[0];
  if (kind == "conv2d") {
    if (w.size() != 8) throw ModelIoError(ModelIoErrc::BadHeader, "conv2d line needs 7 fields");
    expect_word(w, 4, "stride");
    expect_word(w, 6, "padding");
    const std::size_t out = parse_count(w[1], "channels"), in = parse_count(w[2], "channels");
    const std::size_t k = parse_count(w[3], "kernel");
    Conv2d conv{parameter_tensor({out, in, k, k}), parameter_tensor({out}), parse_count(w[5], "stride"), parse_count(w[7], "padding")};
    return conv;
  }
  if (kind == "dense") {
    if (w.size() != 3) throw ModelIoError(ModelIoErrc::BadHeader, "dense line needs 2 fields");
    const std::size_t out = parse_count(w[1], "features"), in = parse_count(w[2], "features");
    return Dense{parameter_tensor({out, in}), parameter_tensor({out})};
  }
  if (kind == "avgpool" || kind == "maxpool") {
    if (w.size() != 4) throw ModelIoError(ModelIoErrc::BadHeader, "pool line needs 3 fields");
    expect_word(w, 2, "stride");
    const std::size_t k = parse_count(w[1], "kernel"), s = parse_count(w[3], "stride");
    if (kind == "avgpool") return AvgPool{k, s};
    return MaxPool{k, s};
  }
  if (kind == "relu" || kind == "flatten") {
    if (w.size() != 1) throw ModelIoError(ModelIoErrc::BadHeader, std::string(kind) + " takes no fields");
    if (kind == "relu") return ReLU{};
    return Flatten{};
  }
  throw ModelIoError(ModelIoErrc::UnknownLayer, "unknown layer kind '" + std::string(kind) + "'");
}

std::string layer_line(const Layer& layer) {
  std::ostringstream out;
  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Conv2d>) {
          out << "conv2d " << l.out_channels() << ' ' << l.in_channels() << ' ' << l.kernel() << " stride "
              << l.stride << " padding " << l.padding;
        } else if constexpr (std::is_same_v<T, Dense>) {
          out << "dense " << l.out_features() << ' ' << l.in_features();
        } else if constexpr (std::is_same_v<T, AvgPool>) {
          out << "avgpool " << l.kernel << " stride " << l.stride;
        } else if constexpr (std::is_same_v<T, MaxPool>) {
          out << "maxpool " << l.kernel << " stride " << l.stride;
        } else if constexpr (std::is_same_v<T, ReLU>) {
          out << "relu";
        } else {
          out << "flatten";
        }
      },
      layer);
  return out.str();
}

void append_f32_le(std::string& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  char buf[4];
  std::memcpy(buf, &bits, 4);
  out.append(buf, 4);
}

float read_f32_le(const char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::string_view to_string(ModelIoErrc code) noexcept {
  switch (code) {
    case ModelIoErrc::Io: return "io";
    case ModelIoErrc::BadHeader: return "bad-header";
    case ModelIoErrc::UnsupportedVersion: return "unsupported-version";
    case ModelIoErrc::UnknownLayer: return "unknown-layer";
    case ModelIoErrc::ShapeMismatch: return "shape-mismatch";
    case ModelIoErrc::TruncatedBlob: return "truncated-blob";
    case ModelIoErrc::TrailingBytes: return "trailing-bytes";
    case ModelIoErrc::NonFinite: return "non-finite";
    case ModelIoErrc::EmptyModel: return "empty-model";
  }
  return "unknown";
}

std::string serialize_model(const Model& model) {
  if (model.layers().empty()) throw ModelIoError(ModelIoErrc::EmptyModel, "model has no layers");
  if (!model.all_finite()) throw ModelIoError(ModelIoErrc::NonFinite, "model has non-finite parameters");

  std::vector<Layer> layers = model.layers();
  const auto params = parameters(layers);

  std::ostringstream manifest;
  manifest << kMagic << ' ' << kVersion << '\n' << "endian little\n" << "input";
  for (auto d : model.input_shape()) manifest << ' ' << d;
  manifest << '\n' << "layers " << layers.size() << '\n';
  for (const auto& layer : layers) manifest << layer_line(layer) << '\n';
  manifest << "blobs " << params.size() << '\n';
  for (const auto& p : params) {
    manifest << "blob " << p.layer << ' ' << p.name;
    for (auto d : p.tensor->shape()) manifest << ' ' << d;
    manifest << '\n';
  }
  manifest << "end\n";

  std::string out = manifest.str();
  for (const auto& p : params) {
    for (float v : p.tensor->values()) append_f32_le(out, v);
  }
  return out;
}

Model parse_model(std::string_view bytes) {
  LineReader reader(bytes);

  auto words = split_words(reader.next());
  if (words.size() != 2 || words[0] != kMagic) throw ModelIoError(ModelIoErrc::BadHeader, "missing dmt-model magic");
  if (words[1] != "1") {
    throw ModelIoError(ModelIoErrc::UnsupportedVersion, "format version '" + std::string(words[1]) + "'");
  }

  words = split_words(reader.next());
  if (words.size() != 2 || words[0] != "endian") throw ModelIoError(ModelIoErrc::BadHeader, "missing endian tag");
  if (words[1] != "little") {
    throw ModelIoError(ModelIoErrc::UnsupportedVersion, "endianness '" + std::string(words[1]) + "'");
  }

  words = split_words(reader.next());
  if (words.size() < 2 || words[0] != "input") throw ModelIoError(ModelIoErrc::BadHeader, "missing input shape");
  Shape input_shape;
  for (std::size_t i = 1; i < words.size(); ++i) input_shape.push_back(parse_count(words[i], "input dim"));

  words = split_words(reader.next());
  if (words.size() != 2 || words[0] != "layers") throw ModelIoError(ModelIoErrc::BadHeader, "missing layer count");
  const std::size_t layer_count = parse_count(words[1], "layer count");
  if (layer_count == 0) throw ModelIoError(ModelIoErrc::EmptyModel, "model has no layers");

  std::vector<Layer> layers;
  for (std::size_t i = 0; i < layer_count; ++i) layers.push_back(parse_layer(split_words(reader.next())));

  words = split_words(reader.next());
  if (words.size() != 2 || words[0] != "blobs") throw ModelIoError(ModelIoErrc::BadHeader, "missing blob count");
  const std::size_t blob_count = parse_count(words[1], "blob count");
  auto params = parameters(layers);
  if (blob_count != params.size()) {
    throw ModelIoError(ModelIoErrc::ShapeMismatch, "layers need " + std::to_string(params.size()) +
                                                       " blobs, manifest declares " + std::to_string(blob_count));
  }

  std::size_t payload_bytes = 0;
  for (const auto& p : params) {
    words = split_words(reader.next());
    if (words.size() < 4 || words[0] != "blob") throw ModelIoError(ModelIoErrc::BadHeader, "malformed blob line");
    const std::size_t layer = parse_count(words[1], "blob layer");
    Shape declared;
    for (std::size_t i = 3; i < words.size(); ++i) declared.push_back(parse_count(words[i], "blob dim"));
    if (layer != p.layer || words[2] != p.name || declared != p.tensor->shape()) {
      throw ModelIoError(ModelIoErrc::ShapeMismatch, "blob for layer " + std::to_string(p.layer) + " " +
                                                         std::string(p.name) + " should be " +
                                                         shape_to_string(p.tensor->shape()));
    }
    payload_bytes += 4 * p.tensor->size();
  }

  words = split_words(reader.next());
  if (words.size() != 1 || words[0] != "end") throw ModelIoError(ModelIoErrc::BadHeader, "missing 'end' line");

  const std::size_t start = reader.position();
  const std::size_t available = bytes.size() - start;
  if (available < payload_bytes) {
    throw ModelIoError(ModelIoErrc::TruncatedBlob, "payload has " + std::to_string(available) + " bytes, expected " +
                                                       std::to_string(payload_bytes));
  }
  if (available > payload_bytes) {
    throw ModelIoError(ModelIoErrc::TrailingBytes, "payload has " + std::to_string(available) + " bytes, expected " +
                                                       std::to_string(payload_bytes));
  }

  const char* cursor = bytes.data() + start;
  for (auto& p : params) {
    for (float& v : p.tensor->values()) {
      v = read_f32_le(cursor);
      cursor += 4;
    }
    if (!p.tensor->all_finite()) {
      throw ModelIoError(ModelIoErrc::NonFinite, "layer " + std::to_string(p.layer) + " " + std::string(p.name));
    }
  }

  try {
    return Model(std::move(input_shape), std::move(layers));
  } catch (const ShapeError& e) {
    throw ModelIoError(ModelIoErrc::ShapeMismatch, e.what());
  }
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelIoError(ModelIoErrc::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelIoError(ModelIoErrc::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelIoError(ModelIoErrc::Io, "short write to " + path.string());
}

}  // namespace dmt
