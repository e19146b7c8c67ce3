#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dmt/attribution.hpp"
#include "dmt/concept.hpp"
#include "dmt/engine.hpp"
#include "dmt/idx.hpp"
#include "dmt/iou.hpp"
#include "dmt/model.hpp"
#include "dmt/mutation.hpp"

namespace dmt {

inline constexpr double kDefaultIouThreshold = 0.2;
inline constexpr double kStrictIouThreshold = 0.8;

/// Outcome of one (seed, mutant) pair. A fourth combination (label changed
/// while the decision stayed) cannot be produced by classify().
enum class Quadrant { Consistent = 1, LabelChanged = 2, HiddenDefect = 3 };

std::string_view quadrant_name(Quadrant q) noexcept;

/// Same label: IoU >= tiou is Consistent, below is HiddenDefect.
/// Different label: always LabelChanged.
Quadrant classify(std::size_t first_label, std::size_t second_label, double iou_value, double tiou);

struct HarnessConfig {
  double tiou = kDefaultIouThreshold;
  Baseline baseline = Baseline::zeros();
  ConceptParams concepts;
};

/// Label plus the decision behind it (attribution taken at the predicted label).
struct DecisionView {
  Prediction prediction;
  Decision decision;
};

/// Decision extraction for one model and configuration: one forward and one
/// backward pass per image, the baseline pass being shared.
class Decider {
 public:
  Decider(const Model& model, const HarnessConfig& config);

  DecisionView decide(const Tensor& image) const;

 private:
  const Model* model_;
  ConceptParams concepts_;
  DeepLift explainer_;
};

DecisionView decide(const Model& model, const Tensor& image, const HarnessConfig& config);

struct TestPair {
  std::size_t seed_index = 0;
  std::string seed_id;
  Tensor seed;
  Tensor mutant;
  MutationRecord record;
  Prediction first;
  Prediction second;
  Decision first_decision;
  Decision second_decision;
  IouResult iou;
  Quadrant quadrant = Quadrant::Consistent;

  bool same_label() const noexcept { return first.label == second.label; }
  /// Either side had no usable decision (Otsu could not split its field), or
  /// the IoU compared two empty decisions. Such pairs stay in their set and
  /// are reported separately.
  bool degenerate() const noexcept {
    return first_decision.degenerate || second_decision.degenerate || iou.degenerate;
  }
  /// Label changed while the corrected decision stayed identical.
  bool identical_decision_label_changed() const noexcept {
    return !same_label() && !iou.degenerate && iou.intersection == iou.union_size;
  }
};

/// Mutates `seed`, runs the model on both images, extracts both decisions and
/// classifies the pair.
TestPair evaluate_pair(const Model& model, const ImageRecord& seed, std::size_t seed_index, const MutationSpec& spec,
                       const HarnessConfig& config);

struct PairSetOptions {
  std::size_t target_size = 1000;   // per set
  std::size_t max_attempts = 0;     // 0 means 50 * target_size
  std::uint64_t seed = 0;
  std::vector<Family> families;     // sampled uniformly when fixed_specs is empty
  std::vector<MutationSpec> fixed_specs;  // cycled in order when non-empty
  MutationRanges ranges;
  std::size_t batch = 64;
};

/// Pairs split by whether the label survived the mutation.
struct PairSets {
  std::vector<TestPair> same;       // L1 == L2
  std::vector<TestPair> different;  // L1 != L2
  std::size_t attempts = 0;
  bool cap_hit = false;             // stopped by max_attempts before both sets filled
};

/// Draws (seed, spec) candidates until both sets reach target_size or the
/// attempt cap. Candidates are evaluated in parallel but appended in draw
/// order, so the result depends only on the inputs and options.seed.
PairSets build_pair_sets(const Model& model, const std::vector<ImageRecord>& dataset, const PairSetOptions& options,
                         const HarnessConfig& config);

struct ValidationResult {
  std::size_t evaluated = 0;   // decisions checked (two per pair at most)
  std::size_t skipped = 0;     // empty decisions, not counted in the rates
  std::size_t keep_unchanged = 0;
  std::size_t mask_changed = 0;
  double keep_unchanged_rate = 0.0;
  double mask_changed_rate = 0.0;
};

/// Keep-only: pixels outside the decision are set to the baseline.
Tensor keep_only(const Tensor& image, const BinaryMask& decision, const Tensor& baseline);
/// Mask: pixels inside the decision are set to the baseline.
Tensor mask_out(const Tensor& image, const BinaryMask& decision, const Tensor& baseline);

/// For every seed and mutant in `pairs`, checks whether keeping only the
/// decision preserves the model's label and whether removing it changes it.
ValidationResult validate_decisions(const Model& model, const std::vector<TestPair>& pairs, const Baseline& baseline);

}  // namespace dmt
