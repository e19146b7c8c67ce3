#pragma once

#include <cstddef>

#include "dmt/concept.hpp"
#include "dmt/grid.hpp"
#include "dmt/mutation.hpp"

namespace dmt {

struct IouResult {
  double value = 1.0;
  std::size_t intersection = 0;
  std::size_t union_size = 0;
  bool degenerate = false;  // both masks empty; value is defined as 1
};

/// |a & b| / |a | b|. Throws ShapeError when the planes differ in size.
IouResult iou(const BinaryMask& a, const BinaryMask& b);

/// IoU counted only where `validity` is set.
IouResult iou(const BinaryMask& a, const BinaryMask& b, const BinaryMask& validity);

/// Maps `second` (a decision on the mutant) back onto the seed's frame and
/// compares it with `first`. For affine mutations the mask is warped through
/// the recorded inverse and pixels that left the image are excluded.
IouResult decision_iou(const Decision& first, const Decision& second, const MutationRecord& record);

}  // namespace dmt
