#include "dmt/harness.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <optional>
#include <random>

#include "dmt/error.hpp"

namespace dmt {

namespace {

// Runs body(i) for i in [0, n) across threads and rethrows the first failure
// by index once all iterations are done.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> failures(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

void finish_pair(const Decider& decider, TestPair& pair, const HarnessConfig& config) {
  pair.first_decision = decider.decide(pair.seed).decision;
  pair.second_decision = decider.decide(pair.mutant).decision;
  pair.iou = decision_iou(pair.first_decision, pair.second_decision, pair.record);
  pair.quadrant = classify(pair.first.label, pair.second.label, pair.iou.value, config.tiou);
}

struct Candidate {
  std::size_t seed_index;
  MutationSpec spec;
};

}  // namespace

std::string_view quadrant_name(Quadrant q) noexcept {
  switch (q) {
    case Quadrant::Consistent: return "consistent";
    case Quadrant::LabelChanged: return "label-changed";
    case Quadrant::HiddenDefect: return "hidden-defect";
  }
  return "?";
}

Quadrant classify(std::size_t first_label, std::size_t second_label, double iou_value, double tiou) {
  if (first_label != second_label) return Quadrant::LabelChanged;
  return iou_value >= tiou ? Quadrant::Consistent : Quadrant::HiddenDefect;
}

Decider::Decider(const Model& model, const HarnessConfig& config)
    : model_(&model), concepts_(config.concepts), explainer_(model, config.baseline) {}

DecisionView Decider::decide(const Tensor& image) const {
  if (image.rank() != 3) throw ShapeError("decision expects a (C, H, W) image");
  const Trace trace = forward(*model_, image);
  DecisionView view;
  view.prediction = predict_from_logits(trace.logits().values());
  const AttributionMap map = explainer_.attribute(image, trace, view.prediction.label);
  view.decision = to_concepts(map.scores, concepts_);
  return view;
}

DecisionView decide(const Model& model, const Tensor& image, const HarnessConfig& config) {
  return Decider(model, config).decide(image);
}

TestPair evaluate_pair(const Model& model, const ImageRecord& seed, std::size_t seed_index, const MutationSpec& spec,
                       const HarnessConfig& config) {
  TestPair pair;
  pair.seed_index = seed_index;
  pair.seed_id = seed.source_id;
  pair.seed = seed.pixels;
  MutationResult m = mutate(seed.pixels, spec, &model);
  pair.mutant = std::move(m.image);
  pair.record = std::move(m.record);
  pair.first = predict(model, pair.seed);
  pair.second = predict(model, pair.mutant);
  finish_pair(Decider(model, config), pair, config);
  return pair;
}

PairSets build_pair_sets(const Model& model, const std::vector<ImageRecord>& dataset, const PairSetOptions& options,
                         const HarnessConfig& config) {
  if (dataset.empty()) throw DataError("pair construction needs at least one seed image");
  if (options.fixed_specs.empty() && options.families.empty()) {
    throw ConfigError("pair construction needs mutation families or fixed specs");
  }
  if (options.batch == 0) throw ConfigError("batch size must be positive");
  const Tensor& first = dataset.front().pixels;
  if (first.shape() != model.input_shape()) {
    throw ShapeError("seed images are " + shape_to_string(first.shape()) + " but the model expects " +
                     shape_to_string(model.input_shape()));
  }
  const std::size_t height = first.dim(1), width = first.dim(2);
  for (Family f : options.families) {
    if (family_needs_rgb(f) && first.dim(0) != 3) {
      throw ConfigError("mutation family '" + std::string(family_name(f)) + "' needs RGB images");
    }
  }

  const Decider decider(model, config);
  PairSets sets;
  const std::size_t target = options.target_size;
  const std::size_t cap = options.max_attempts == 0 ? 50 * std::max<std::size_t>(target, 1) : options.max_attempts;
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::uniform_int_distribution<std::size_t> pick_family(0, options.families.empty() ? 0 : options.families.size() - 1);

  auto draw = [&](std::size_t attempt) {
    const std::size_t n = dataset.size();
    if (attempt % n == 0) std::shuffle(order.begin(), order.end(), rng);
    Candidate c{order[attempt % n], Brightness{}};
    if (!options.fixed_specs.empty()) {
      c.spec = options.fixed_specs[(attempt / n) % options.fixed_specs.size()];
    } else {
      c.spec = sample_spec(options.families[pick_family(rng)], rng, options.ranges, height, width);
    }
    return c;
  };

  while ((sets.same.size() < target || sets.different.size() < target) && sets.attempts < cap) {
    const std::size_t count = std::min(options.batch, cap - sets.attempts);
    std::vector<Candidate> batch;
    batch.reserve(count);
    for (std::size_t i = 0; i < count; ++i) batch.push_back(draw(sets.attempts + i));
    sets.attempts += count;

    // Labels first; decisions are only worth computing for pairs a set still needs.
    std::vector<TestPair> pairs(count);
    parallel_for(count, [&](std::size_t i) {
      const ImageRecord& seed = dataset[batch[i].seed_index];
      TestPair& p = pairs[i];
      p.seed_index = batch[i].seed_index;
      p.seed_id = seed.source_id;
      p.seed = seed.pixels;
      MutationResult m = mutate(seed.pixels, batch[i].spec, &model);
      p.mutant = std::move(m.image);
      p.record = std::move(m.record);
      p.first = predict(model, p.seed);
      p.second = predict(model, p.mutant);
    });

    std::vector<std::size_t> chosen;
    std::size_t want_same = target - std::min(target, sets.same.size());
    std::size_t want_diff = target - std::min(target, sets.different.size());
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t& want = pairs[i].same_label() ? want_same : want_diff;
      if (want == 0) continue;
      --want;
      chosen.push_back(i);
    }
    parallel_for(chosen.size(), [&](std::size_t j) { finish_pair(decider, pairs[chosen[j]], config); });

    for (std::size_t i : chosen) {
      TestPair& p = pairs[i];
      (p.same_label() ? sets.same : sets.different).push_back(std::move(p));
    }
  }
  sets.cap_hit = sets.same.size() < target || sets.different.size() < target;
  return sets;
}

Tensor keep_only(const Tensor& image, const BinaryMask& decision, const Tensor& baseline) {
  if (image.shape() != baseline.shape()) throw ShapeError("baseline does not match the image");
  const std::size_t plane = decision.size();
  if (image.rank() != 3 || image.dim(1) != decision.height() || image.dim(2) != decision.width()) {
    throw ShapeError("decision does not match the image");
  }
  Tensor out = image;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!decision[i % plane]) out[i] = baseline[i];
  }
  return out;
}

Tensor mask_out(const Tensor& image, const BinaryMask& decision, const Tensor& baseline) {
  if (image.shape() != baseline.shape()) throw ShapeError("baseline does not match the image");
  const std::size_t plane = decision.size();
  if (image.rank() != 3 || image.dim(1) != decision.height() || image.dim(2) != decision.width()) {
    throw ShapeError("decision does not match the image");
  }
  Tensor out = image;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (decision[i % plane]) out[i] = baseline[i];
  }
  return out;
}

ValidationResult validate_decisions(const Model& model, const std::vector<TestPair>& pairs, const Baseline& baseline) {
  ValidationResult r;
  const Tensor base = baseline.resolve(model.input_shape());
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
  std::size_t evaluated = 0, skipped = 0, kept = 0, changed = 0;
  std::vector<std::exception_ptr> failures(pairs.size());
#pragma omp parallel for schedule(dynamic, 4) reduction(+ : evaluated, skipped, kept, changed)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const TestPair& p = pairs[static_cast<std::size_t>(i)];
      const std::pair<const Tensor*, const Decision*> sides[2] = {{&p.seed, &p.first_decision},
                                                                  {&p.mutant, &p.second_decision}};
      for (const auto& [image, decision] : sides) {
        if (count(decision->mask) == 0) {
          ++skipped;
          continue;
        }
        const std::size_t label = predict(model, *image).label;
        ++evaluated;
        if (predict(model, keep_only(*image, decision->mask, base)).label == label) ++kept;
        if (predict(model, mask_out(*image, decision->mask, base)).label != label) ++changed;
      }
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  r.evaluated = evaluated;
  r.skipped = skipped;
  r.keep_unchanged = kept;
  r.mask_changed = changed;
  if (evaluated > 0) {
    r.keep_unchanged_rate = static_cast<double>(kept) / static_cast<double>(evaluated);
    r.mask_changed_rate = static_cast<double>(changed) / static_cast<double>(evaluated);
  }
  return r;
}

}  // namespace dmt
