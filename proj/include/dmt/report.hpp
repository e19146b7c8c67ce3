#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmt/harness.hpp"

namespace dmt {

inline constexpr std::size_t kHistogramBins = 20;

/// 20 equal bins over [0, 1]; v = 1 falls in the last bin.
struct IouHistogram {
  std::array<std::size_t, kHistogramBins> counts{};
  std::array<double, kHistogramBins> cdf{};  // all zero when total == 0
  std::size_t total = 0;
};

IouHistogram make_histogram(std::span<const double> values);

/// One model's finished campaign.
struct ModelCampaign {
  std::string model_name;
  double tiou = kDefaultIouThreshold;
  PairSets sets;
  std::optional<ValidationResult> validation;
  double seconds = 0.0;
};

/// Statistics for one (model, family) group; family "all" covers the model.
struct GroupStats {
  std::string model;
  std::string family;
  std::size_t same = 0;
  std::size_t different = 0;
  std::size_t degenerate = 0;
  std::array<std::size_t, 3> quadrants{};  // consistent, label-changed, hidden-defect
  std::size_t identical_decision_label_changed = 0;  // must stay 0
  std::size_t strict_below = 0;  // same-label pairs with v < kStrictIouThreshold
  IouHistogram histogram;        // same-label pairs only
  std::optional<double> max_iou_different;  // over pairs whose IoU is not degenerate

  double hidden_defect_fraction() const noexcept {
    return same == 0 ? 0.0 : static_cast<double>(quadrants[2]) / static_cast<double>(same);
  }
};

struct CampaignReport {
  std::vector<GroupStats> groups;  // per model: "all" first, then families by name
};

CampaignReport summarize(const std::vector<ModelCampaign>& campaigns);

struct ReportOptions {
  std::size_t exemplars_per_model = 8;  // hidden-defect triptychs written per model
};

/// Writes summary.txt, groups.tsv, pairs.tsv, hist/<model>__<family>.tsv and
/// exemplars/<model>_<n>.pgm (seed | D1 | corrected D2) under `dir`.
CampaignReport emit_report(const std::vector<ModelCampaign>& campaigns, const std::filesystem::path& dir,
                           const ReportOptions& options = {});

}  // namespace dmt
