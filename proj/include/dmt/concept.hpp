#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dmt/grid.hpp"
#include "dmt/morphology.hpp"

namespace dmt {

inline constexpr std::size_t kOtsuBins = 256;

/// Which scores enter the Otsu histogram.
enum class OtsuDomain {
  Full,      // every finite score, bins over [min(0, min), max]
  Positive,  // strictly positive scores only, bins over [0, max]
};

struct OtsuResult {
  float threshold = 0.0f;  // upper edge of `bin`; supporting pixels lie above it
  std::size_t bin = 0;     // last bin of the non-supporting class
  float min_value = 0.0f;  // histogram spans [min_value, max_value]
  float max_value = 0.0f;
  OtsuDomain domain = OtsuDomain::Full;
  bool degenerate = true;  // no positive score, or the histogram occupies a single bin
};

/// Bin of `value` under a 256-bin layout of [min_value, max_value].
std::size_t otsu_bin(float value, float min_value, float max_value) noexcept;
std::size_t otsu_bin(float value, float max_value) noexcept;

/// Otsu's threshold over a 256-bin histogram of the field: picks the split
/// maximising between-class variance, lowest bin on ties. The objective is
/// compared in exact integer arithmetic on bin indices. Fields above 2^18
/// pixels are rejected (the exact comparison would overflow).
OtsuResult otsu_threshold(const ScoreField& field, OtsuDomain domain = OtsuDomain::Full);

/// true where value > 0 and its bin lies above the Otsu split. A degenerate
/// result yields an all-false mask.
BinaryMask binarize(const ScoreField& field, const OtsuResult& otsu);

struct BoundingBox {
  std::size_t top = 0, left = 0, bottom = 0, right = 0;  // inclusive
};

/// One 8-connected region of supporting pixels.
struct VisualConcept {
  std::vector<std::size_t> pixels;  // row-major indices, ascending
  BoundingBox box;

  std::size_t area() const noexcept { return pixels.size(); }
};

/// 8-connected components of `mask`, ordered by their first pixel in raster order.
std::vector<VisualConcept> connected_components(const BinaryMask& mask);

struct ConceptParams {
  std::size_t closing_kernel = 5;
  std::size_t opening_kernel = 3;
  std::size_t min_area_28 = 4;  // smallest concept at 28 x 28, scaled by pixel count
  Border border = Border::Ignore;
  OtsuDomain otsu_domain = OtsuDomain::Full;
};

/// max(1, round(min_area_28 * H * W / 784)).
std::size_t min_concept_area(std::size_t height, std::size_t width, std::size_t min_area_28 = 4);

/// A model decision: the union of its visual concepts.
struct Decision {
  BinaryMask mask;
  std::vector<VisualConcept> concepts;
  bool degenerate = false;  // Otsu could not split the field
};

/// opening(closing(binarize(field))) split into 8-connected concepts; regions
/// below the minimum area are removed from the mask as well. `field` is the
/// signed score map; only positive scores can become supporting pixels, but
/// under OtsuDomain::Full the rest still shape the histogram.
Decision to_concepts(const ScoreField& field, const ConceptParams& params = {});

/// "id top left bottom right area" per line.
std::string format_concepts(const Decision& decision);

}  // namespace dmt
