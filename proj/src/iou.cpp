#include "dmt/iou.hpp"

#include "dmt/error.hpp"

namespace dmt {

namespace {

IouResult finish(std::size_t inter, std::size_t uni) {
  IouResult r;
  r.intersection = inter;
  r.union_size = uni;
  if (uni == 0) {
    r.value = 1.0;
    r.degenerate = true;
  } else {
    r.value = static_cast<double>(inter) / static_cast<double>(uni);
  }
  return r;
}

void check_same(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("IoU of " + std::to_string(a.height()) + "x" + std::to_string(a.width()) + " and " +
                     std::to_string(b.height()) + "x" + std::to_string(b.width()) + " masks");
  }
}

}  // namespace

IouResult iou(const BinaryMask& a, const BinaryMask& b) {
  check_same(a, b);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
  }
  return finish(inter, uni);
}

IouResult iou(const BinaryMask& a, const BinaryMask& b, const BinaryMask& validity) {
  check_same(a, b);
  check_same(a, validity);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!validity[i]) continue;
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
  }
  return finish(inter, uni);
}

IouResult decision_iou(const Decision& first, const Decision& second, const MutationRecord& record) {
  if (!record.inverse) return iou(first.mask, second.mask);
  const BinaryMask restored = warp_mask(second.mask, *record.inverse);
  if (record.validity.size() == 0) return iou(first.mask, restored);
  return iou(first.mask, restored, record.validity);
}

}  // namespace dmt
