#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "dmt/bench.hpp"
#include "dmt/error.hpp"
#include "dmt/harness.hpp"
#include "dmt/idx.hpp"
#include "dmt/model_io.hpp"
#include "dmt/report.hpp"
#include "support.hpp"

using namespace dmt;

namespace {

const Model& lenet5() {
  static const Model m = load_model(testing::fixture("lenet5.dmtm"));
  return m;
}

const std::vector<ImageRecord>& digits() {
  static const std::vector<ImageRecord> d = [] {
    auto all = load_idx_dataset(testing::fixture("mnist-test-images.idx"), testing::fixture("mnist-test-labels.idx"));
    all.resize(40);
    return all;
  }();
  return d;
}

HarnessConfig mean_config() {
  HarnessConfig c;
  c.baseline = Baseline::dataset_mean(mean_image(digits()));
  return c;
}

BinaryMask rect(std::size_t h, std::size_t w, std::size_t top, std::size_t left, std::size_t rows, std::size_t cols) {
  BinaryMask m(h, w);
  for (std::size_t y = top; y < top + rows; ++y) {
    for (std::size_t x = left; x < left + cols; ++x) m.at(y, x) = 1;
  }
  return m;
}

}  // namespace

TEST_CASE("IoU on overlapping rectangles") {
  // Two 4x4 squares overlapping in a 4x2 strip: 8 / 24.
  const auto a = rect(10, 10, 0, 0, 4, 4), b = rect(10, 10, 0, 2, 4, 4);
  const IouResult r = iou(a, b);
  CHECK(r.intersection == 8);
  CHECK(r.union_size == 24);
  CHECK(r.value == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(r.degenerate);
  CHECK(iou(a, a).value == 1.0);
  CHECK(iou(a, rect(10, 10, 6, 6, 2, 2)).value == 0.0);
  const IouResult empty = iou(BinaryMask(3, 3), BinaryMask(3, 3));
  CHECK(empty.value == 1.0);
  CHECK(empty.degenerate);
  CHECK_THROWS_AS(iou(a, BinaryMask(9, 10)), ShapeError);
  // Only the valid columns 0..2 count: intersection 4, union 12.
  CHECK(iou(a, b, rect(10, 10, 0, 0, 10, 3)).value == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("decision IoU undoes the affine map") {
  Decision first, second;
  first.mask = rect(12, 12, 3, 3, 4, 5);
  const auto shift = AffineMatrix::translation(2, 1);
  second.mask = warp_mask(first.mask, shift);
  MutationRecord record{Affine{shift}, shift.inverse(), valid_region(12, 12, shift)};
  CHECK(decision_iou(first, second, record).value == 1.0);
  const auto turn = AffineMatrix::rotation(90, 5.5, 5.5);
  second.mask = warp_mask(first.mask, turn);
  record = MutationRecord{Affine{turn}, turn.inverse(), valid_region(12, 12, turn)};
  CHECK(decision_iou(first, second, record).value == 1.0);
}

TEST_CASE("quadrant classification") {
  CHECK(classify(3, 3, 0.5, 0.2) == Quadrant::Consistent);
  CHECK(classify(3, 3, 0.2, 0.2) == Quadrant::Consistent);
  CHECK(classify(3, 3, 0.19, 0.2) == Quadrant::HiddenDefect);
  CHECK(classify(3, 4, 1.0, 0.2) == Quadrant::LabelChanged);
  CHECK(classify(3, 4, 0.0, 0.2) == Quadrant::LabelChanged);
  CHECK(quadrant_name(Quadrant::HiddenDefect) == "hidden-defect");
}

TEST_CASE("an identity mutation is consistent") {
  const auto config = mean_config();
  for (std::size_t i = 0; i < 10; ++i) {
    const TestPair p = evaluate_pair(lenet5(), digits()[i], i, Contrast{1.0}, config);
    CHECK(p.mutant == p.seed);
    CHECK(p.same_label());
    CHECK(p.first_decision.mask == p.second_decision.mask);
    CHECK(p.iou.value == 1.0);
    CHECK(p.quadrant == Quadrant::Consistent);
    CHECK_FALSE(p.identical_decision_label_changed());
  }
}

TEST_CASE("a label flip lands in the label-changed quadrant") {
  // logit0 = sum(x) - 2 against a constant 0: 0.45 everywhere is class 1,
  // 0.55 everywhere is class 0.
  const Model m({1, 2, 2}, {Flatten{}, Dense{Tensor({2, 4}, {1, 1, 1, 1, 0, 0, 0, 0}), Tensor({2}, {-2.0f, 0.0f})}});
  const ImageRecord seed{Tensor({1, 2, 2}, 0.45f), "flat", std::nullopt};
  const TestPair p = evaluate_pair(m, seed, 0, Brightness{0.1}, HarnessConfig{});
  CHECK(p.first.label == 1);
  CHECK(p.second.label == 0);
  CHECK(p.quadrant == Quadrant::LabelChanged);
}

TEST_CASE("identity-only campaigns hit the attempt cap with no label changes") {
  PairSetOptions options;
  options.target_size = 5;
  options.max_attempts = 20;
  options.fixed_specs = {Contrast{1.0}};
  const PairSets sets = build_pair_sets(lenet5(), digits(), options, mean_config());
  CHECK(sets.same.size() == 5);
  CHECK(sets.different.empty());
  CHECK(sets.cap_hit);
  CHECK(sets.attempts == 20);
}

TEST_CASE("pair sets are reproducible and partitioned by re-prediction") {
  PairSetOptions options;
  options.target_size = 6;
  options.max_attempts = 400;
  options.seed = 5;
  options.batch = 16;
  options.families = {Family::Brightness, Family::Affine, Family::Fgsm};
  const auto config = mean_config();
  const PairSets a = build_pair_sets(lenet5(), digits(), options, config);
  const PairSets b = build_pair_sets(lenet5(), digits(), options, config);
  REQUIRE(a.same.size() == 6);
  REQUIRE(a.different.size() == 6);
  CHECK_FALSE(a.cap_hit);
  CHECK(a.attempts == b.attempts);
  for (const auto* set : {&a.same, &a.different}) {
    const auto& other = set == &a.same ? b.same : b.different;
    for (std::size_t i = 0; i < set->size(); ++i) {
      const TestPair& p = (*set)[i];
      CHECK(p.seed_index == other[i].seed_index);
      CHECK(format_spec(p.record.spec) == format_spec(other[i].record.spec));
      CHECK(p.iou.value == other[i].iou.value);
      CHECK(p.first.label == predict(lenet5(), p.seed).label);
      CHECK(p.second.label == predict(lenet5(), p.mutant).label);
      CHECK(p.same_label() == (set == &a.same));
    }
  }
}

TEST_CASE("pair construction rejects unusable inputs") {
  PairSetOptions options;
  options.target_size = 2;
  const auto config = mean_config();
  CHECK_THROWS_AS(build_pair_sets(lenet5(), digits(), options, config), ConfigError);
  options.families = {Family::Weather};
  CHECK_THROWS_AS(build_pair_sets(lenet5(), digits(), options, config), ConfigError);
  options.families = {Family::Blur};
  CHECK_THROWS_AS(build_pair_sets(lenet5(), {}, options, config), DataError);
  const std::vector<ImageRecord> small{{Tensor({1, 8, 8}, 0.5f), "small", std::nullopt}};
  CHECK_THROWS_AS(build_pair_sets(lenet5(), small, options, config), ShapeError);
}

TEST_CASE("keep-only and mask-out replace pixels with the baseline") {
  const Tensor img({1, 1, 3}, {0.2f, 0.4f, 0.6f});
  const Tensor base({1, 1, 3}, {0.9f, 0.9f, 0.9f});
  BinaryMask d(1, 3);
  d[1] = 1;
  CHECK(keep_only(img, d, base) == Tensor({1, 1, 3}, {0.9f, 0.4f, 0.9f}));
  CHECK(mask_out(img, d, base) == Tensor({1, 1, 3}, {0.2f, 0.9f, 0.6f}));
}

TEST_CASE("a constant-logit model keeps every label") {
  const Model m({1, 4, 4}, {Flatten{}, Dense{Tensor({2, 16}, 0.0f), Tensor({2}, {1.0f, 0.0f})}});
  std::vector<TestPair> pairs(3);
  for (auto& p : pairs) {
    p.seed = Tensor({1, 4, 4}, 0.7f);
    p.mutant = Tensor({1, 4, 4}, 0.3f);
    p.first_decision.mask = rect(4, 4, 1, 1, 2, 2);
    p.second_decision.mask = rect(4, 4, 0, 0, 2, 2);
  }
  pairs[2].second_decision.mask = BinaryMask(4, 4);
  const ValidationResult v = validate_decisions(m, pairs, Baseline::zeros());
  CHECK(v.evaluated == 5);
  CHECK(v.skipped == 1);
  CHECK(v.keep_unchanged == 5);
  CHECK(v.mask_changed == 0);
  CHECK(v.keep_unchanged_rate == 1.0);
  CHECK(v.mask_changed_rate == 0.0);
}

TEST_CASE("histograms bin IoU values and accumulate to one") {
  const std::vector<double> values{0.0, 0.05, 0.049, 0.5, 0.999, 1.0};
  const IouHistogram h = make_histogram(values);
  CHECK(h.total == 6);
  CHECK(h.counts[0] == 2);
  CHECK(h.counts[1] == 1);
  CHECK(h.counts[10] == 1);
  CHECK(h.counts[19] == 2);
  CHECK(std::is_sorted(h.cdf.begin(), h.cdf.end()));
  CHECK(h.cdf.back() == doctest::Approx(1.0));
  CHECK(make_histogram(std::vector<double>{}).total == 0);
  CHECK_THROWS_AS(make_histogram(std::vector<double>{1.5}), NumericError);
}

TEST_CASE("reports summarise campaigns and write their files") {
  const auto dir = std::filesystem::temp_directory_path() / "dmt_unit_report";
  std::filesystem::remove_all(dir);
  emit_report({}, dir / "empty");
  CHECK(std::filesystem::exists(dir / "empty" / "summary.txt"));

  PairSetOptions options;
  options.target_size = 8;
  options.max_attempts = 600;
  options.seed = 3;
  options.families = {Family::Brightness, Family::Blur, Family::Pgd};
  ModelCampaign campaign{"lenet5", kDefaultIouThreshold, build_pair_sets(lenet5(), digits(), options, mean_config()),
                         std::nullopt, 0.0};
  const CampaignReport report = emit_report({campaign}, dir / "run", {.exemplars_per_model = 2});
  REQUIRE_FALSE(report.groups.empty());
  const GroupStats& all = report.groups.front();
  CHECK(all.family == "all");
  CHECK(all.same == campaign.sets.same.size());
  CHECK(all.different == campaign.sets.different.size());
  CHECK(all.quadrants[0] + all.quadrants[2] == all.same);
  CHECK(all.quadrants[1] == all.different);
  CHECK(all.histogram.total == all.same);
  std::size_t family_same = 0;
  for (std::size_t i = 1; i < report.groups.size(); ++i) {
    family_same += report.groups[i].same;
    if (i > 1) CHECK(report.groups[i - 1].family < report.groups[i].family);
  }
  CHECK(family_same == all.same);
  for (const char* f : {"summary.txt", "groups.tsv", "pairs.tsv", "hist/lenet5__all.tsv"}) {
    CAPTURE(f);
    CHECK(std::filesystem::exists(dir / "run" / f));
  }
  const std::string summary = read_file(dir / "run" / "summary.txt");
  CHECK(summary.find("model.lenet5.quadrant.identical_decision_label_changed = 0") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("the throughput bench runs both modes") {
  std::vector<ImageRecord> few(digits().begin(), digits().begin() + 4);
  const BenchResult r = run_bench(lenet5(), few, 0.2, mean_config());
  CHECK(r.plain_inferences > 0);
  CHECK(r.decision_inferences > 0);
  CHECK(r.slowdown() > 0.0);
  CHECK_THROWS(run_bench(lenet5(), {}, 0.2, mean_config()));
}

TEST_CASE("two empty decisions are flagged and kept out of the different-label maximum") {
  TestPair empty, overlap;
  empty.first.label = overlap.first.label = 1;
  empty.second.label = overlap.second.label = 2;
  empty.record.spec = overlap.record.spec = Brightness{0.1};
  empty.quadrant = overlap.quadrant = Quadrant::LabelChanged;
  empty.iou = iou(BinaryMask(4, 4), BinaryMask(4, 4));
  overlap.iou = iou(rect(4, 4, 0, 0, 2, 2), rect(4, 4, 0, 0, 2, 1));
  CHECK(empty.degenerate());
  CHECK_FALSE(empty.identical_decision_label_changed());
  CHECK_FALSE(overlap.degenerate());

  ModelCampaign c;
  c.model_name = "toy";
  c.sets.different = {empty, overlap};
  const GroupStats all = summarize({c}).groups.front();
  CHECK(all.different == 2);
  CHECK(all.degenerate == 1);
  REQUIRE(all.max_iou_different.has_value());
  CHECK(*all.max_iou_different == doctest::Approx(0.5));
}
