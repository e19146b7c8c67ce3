#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "dmt/error.hpp"
#include "dmt/model.hpp"

namespace dmt {

/// Why a model container could not be read or written.
enum class ModelIoErrc {
  Io,                  // cannot open / read / write
  BadHeader,           // manifest syntax error
  UnsupportedVersion,  // format version other than 1
  UnknownLayer,        // layer keyword not recognised
  ShapeMismatch,       // declared blob shape disagrees with its layer, or layer chain broken
  TruncatedBlob,       // fewer payload bytes than the manifest declares
  TrailingBytes,       // more payload bytes than the manifest declares
  NonFinite,           // NaN / Inf parameter
  EmptyModel,          // no layers
};

std::string_view to_string(ModelIoErrc code) noexcept;

class ModelIoError : public Error {
 public:
  ModelIoError(ModelIoErrc code, const std::string& message)
      : Error(ErrorCategory::Data, std::string(to_string(code)) + ": " + message), code_(code) {}

  ModelIoErrc code() const noexcept { return code_; }

 private:
  ModelIoErrc code_;
};

// Container layout (version 1):
//
//   dmt-model 1
//   endian little
//   input 1 28 28
//   layers 4
//   conv2d 4 1 5 stride 1 padding 0
//   relu
//   flatten
//   dense 10 2304
//   blobs 4
//   blob 0 weight 4 1 5 5
//   blob 0 bias 4
//   blob 3 weight 10 2304
//   blob 3 bias 10
//   end
//   <raw little-endian f32 payload, blobs concatenated in manifest order>
//
// Every manifest line ends with a single '\n'. The payload starts right after
// the "end\n" line. Pool lines read "avgpool <k> stride <s>".

std::string serialize_model(const Model& model);
Model parse_model(std::string_view bytes);

Model load_model(const std::filesystem::path& path);
void save_model(const Model& model, const std::filesystem::path& path);

}  // namespace dmt
