#include "dmt/concept.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>

#include "dmt/error.hpp"

namespace dmt {

std::size_t otsu_bin(float value, float min_value, float max_value) noexcept {
  const double scaled = (static_cast<double>(value) - min_value) / (static_cast<double>(max_value) - min_value) * kOtsuBins;
  if (!(scaled > 0.0)) return 0;
  return std::min(kOtsuBins - 1, static_cast<std::size_t>(scaled));
}

std::size_t otsu_bin(float value, float max_value) noexcept { return otsu_bin(value, 0.0f, max_value); }

OtsuResult otsu_threshold(const ScoreField& field, OtsuDomain domain) {
  if (field.size() > (std::size_t{1} << 18)) {
    throw ShapeError("score field of " + std::to_string(field.size()) + " pixels exceeds the 2^18 limit");
  }
  OtsuResult result;
  result.domain = domain;
  float peak = 0.0f, floor = 0.0f;
  for (float v : field.values()) {
    if (!std::isfinite(v)) continue;
    peak = std::max(peak, v);
    floor = std::min(floor, v);
  }
  result.max_value = peak;
  result.min_value = domain == OtsuDomain::Full ? floor : 0.0f;
  if (peak <= 0.0f) return result;

  std::array<std::int64_t, kOtsuBins> hist{};
  for (float v : field.values()) {
    if (!std::isfinite(v)) continue;
    if (domain == OtsuDomain::Positive && !(v > 0.0f)) continue;
    ++hist[otsu_bin(v, result.min_value, peak)];
  }
  std::int64_t total_n = 0, total_s = 0;
  for (std::size_t b = 0; b < kOtsuBins; ++b) {
    total_n += hist[b];
    total_s += hist[b] * static_cast<std::int64_t>(b);
  }

  // Between-class variance is proportional to (n0*s1 - n1*s0)^2 / (n0*n1);
  // candidates are compared by cross-multiplication in 128-bit integers.
  __extension__ typedef __int128 Wide;
  Wide best_num = -1, best_den = 1;
  std::int64_t n0 = 0, s0 = 0;
  for (std::size_t t = 0; t + 1 < kOtsuBins; ++t) {
    n0 += hist[t];
    s0 += hist[t] * static_cast<std::int64_t>(t);
    const std::int64_t n1 = total_n - n0, s1 = total_s - s0;
    if (n0 == 0 || n1 == 0) continue;
    const Wide diff = static_cast<Wide>(n0) * s1 - static_cast<Wide>(n1) * s0;
    const Wide num = diff * diff;
    const Wide den = static_cast<Wide>(n0) * n1;
    if (best_num < 0 || num * best_den > best_num * den) {
      best_num = num;
      best_den = den;
      result.bin = t;
    }
  }
  if (best_num < 0) return result;
  result.degenerate = false;
  const double span = static_cast<double>(peak) - result.min_value;
  result.threshold = static_cast<float>(result.min_value + (result.bin + 1) * span / kOtsuBins);
  return result;
}

BinaryMask binarize(const ScoreField& field, const OtsuResult& otsu) {
  BinaryMask mask(field.height(), field.width());
  if (otsu.degenerate) return mask;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const float v = field[i];
    mask[i] = (v > 0.0f && std::isfinite(v) && otsu_bin(v, otsu.min_value, otsu.max_value) > otsu.bin) ? 1 : 0;
  }
  return mask;
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

void unite(std::vector<std::size_t>& parent, std::size_t a, std::size_t b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a == b) return;
  if (a < b) std::swap(a, b);
  parent[a] = b;  // smaller index wins, so roots are first pixels in raster order
}

}  // namespace

std::vector<VisualConcept> connected_components(const BinaryMask& mask) {
  const std::size_t h = mask.height(), w = mask.width();
  std::vector<std::size_t> parent(mask.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});

  // Two-pass union-find over the already-visited half of the 8-neighbourhood.
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!mask.at(y, x)) continue;
      const std::size_t here = y * w + x;
      if (x > 0 && mask.at(y, x - 1)) unite(parent, here, here - 1);
      if (y > 0) {
        if (mask.at(y - 1, x)) unite(parent, here, here - w);
        if (x > 0 && mask.at(y - 1, x - 1)) unite(parent, here, here - w - 1);
        if (x + 1 < w && mask.at(y - 1, x + 1)) unite(parent, here, here - w + 1);
      }
    }
  }

  std::vector<VisualConcept> concepts;
  std::vector<std::size_t> slot(mask.size(), static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const std::size_t root = find_root(parent, i);
    if (slot[root] == static_cast<std::size_t>(-1)) {
      slot[root] = concepts.size();
      VisualConcept c;
      c.box = {i / w, i % w, i / w, i % w};
      concepts.push_back(std::move(c));
    }
    auto& c = concepts[slot[root]];
    c.pixels.push_back(i);
    const std::size_t y = i / w, x = i % w;
    c.box.top = std::min(c.box.top, y);
    c.box.bottom = std::max(c.box.bottom, y);
    c.box.left = std::min(c.box.left, x);
    c.box.right = std::max(c.box.right, x);
  }
  return concepts;
}

std::size_t min_concept_area(std::size_t height, std::size_t width, std::size_t min_area_28) {
  const double scaled = static_cast<double>(min_area_28) * static_cast<double>(height * width) / 784.0;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(scaled)));
}

Decision to_concepts(const ScoreField& field, const ConceptParams& params) {
  Decision decision;
  const OtsuResult otsu = otsu_threshold(field, params.otsu_domain);
  decision.mask = BinaryMask(field.height(), field.width());
  if (otsu.degenerate) {
    decision.degenerate = true;
    return decision;
  }
  const BinaryMask shaped =
      opening(closing(binarize(field, otsu), params.closing_kernel, params.border), params.opening_kernel,
              params.border);
  const std::size_t floor = min_concept_area(field.height(), field.width(), params.min_area_28);
  for (auto& concept_region : connected_components(shaped)) {
    if (concept_region.area() < floor) continue;
    for (auto p : concept_region.pixels) decision.mask[p] = 1;
    decision.concepts.push_back(std::move(concept_region));
  }
  return decision;
}

std::string format_concepts(const Decision& decision) {
  std::ostringstream out;
  for (std::size_t i = 0; i < decision.concepts.size(); ++i) {
    const auto& c = decision.concepts[i];
    out << i << ' ' << c.box.top << ' ' << c.box.left << ' ' << c.box.bottom << ' ' << c.box.right << ' '
        << c.area() << '\n';
  }
  return out.str();
}

}  // namespace dmt
