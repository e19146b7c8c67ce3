#pragma once

#include <cstddef>

#include "dmt/concept.hpp"
#include "dmt/grid.hpp"
#include "dmt/morphology.hpp"

// Direct reference implementations used to check the library.
namespace dmt::testing {

/// Erosion (erode = true) or dilation by a k x k window, scanned pixel by pixel.
BinaryMask brute_morph(const BinaryMask& mask, std::size_t kernel, Border border, bool erode);

/// Textbook Otsu over the 256-bin layout: class weights and means in double,
/// first maximum wins.
std::size_t scan_otsu(const ScoreField& field, OtsuDomain domain);

/// Number of 8-connected regions, by breadth-first flood fill.
std::size_t flood_fill_count(const BinaryMask& mask);

/// true when every pixel set in `a` is set in `b`.
bool subset(const BinaryMask& a, const BinaryMask& b);

}  // namespace dmt::testing
