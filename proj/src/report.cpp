#include "dmt/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "dmt/error.hpp"
#include "dmt/mutation.hpp"
#include "dmt/pnm.hpp"

namespace dmt {

namespace {

std::string file_safe(std::string_view name) {
  std::string out;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "_" : out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

void add_pair(GroupStats& g, const TestPair& p, std::vector<double>& same_values) {
  g.quadrants[static_cast<std::size_t>(p.quadrant) - 1]++;
  if (p.degenerate()) ++g.degenerate;
  if (p.same_label()) {
    ++g.same;
    same_values.push_back(p.iou.value);
    if (p.iou.value < kStrictIouThreshold) ++g.strict_below;
  } else {
    ++g.different;
    if (p.identical_decision_label_changed()) ++g.identical_decision_label_changed;
    // Two empty decisions have IoU 1 by convention; that is not a measured overlap.
    if (!p.iou.degenerate) g.max_iou_different = std::max(g.max_iou_different.value_or(0.0), p.iou.value);
  }
}

std::vector<GroupStats> summarize_model(const ModelCampaign& c) {
  GroupStats all;
  all.model = c.model_name;
  all.family = "all";
  std::vector<double> all_values;
  std::map<std::string, std::pair<GroupStats, std::vector<double>>> by_family;
  for (const auto* set : {&c.sets.same, &c.sets.different}) {
    for (const TestPair& p : *set) {
      add_pair(all, p, all_values);
      const std::string fam(family_name(p.record.spec));
      auto [it, fresh] = by_family.try_emplace(fam);
      if (fresh) {
        it->second.first.model = c.model_name;
        it->second.first.family = fam;
      }
      add_pair(it->second.first, p, it->second.second);
    }
  }
  all.histogram = make_histogram(all_values);
  std::vector<GroupStats> out{std::move(all)};
  for (auto& [name, entry] : by_family) {
    entry.first.histogram = make_histogram(entry.second);
    out.push_back(std::move(entry.first));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

Tensor gray_panel(const Tensor& image) {
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor out({h, w});
  for (std::size_t i = 0; i < h * w; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < c; ++k) s += image[k * h * w + i];
    out[i] = static_cast<float>(s / static_cast<double>(c));
  }
  return out;
}

void write_triptych(const TestPair& p, const std::filesystem::path& path) {
  const std::size_t h = p.seed.dim(1), w = p.seed.dim(2), gap = 2, total = 3 * w + 2 * gap;
  const Tensor seed = gray_panel(p.seed);
  const BinaryMask second = p.record.inverse ? warp_mask(p.second_decision.mask, *p.record.inverse)
                                             : p.second_decision.mask;
  Tensor out({1, h, total}, 0.5f);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      out[y * total + x] = seed[y * w + x];
      out[y * total + w + gap + x] = p.first_decision.mask.at(y, x) ? 1.0f : 0.0f;
      out[y * total + 2 * (w + gap) + x] = second.at(y, x) ? 1.0f : 0.0f;
    }
  }
  save_pgm(out, path);
}

}  // namespace

IouHistogram make_histogram(std::span<const double> values) {
  IouHistogram h;
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw NumericError("IoU value outside [0, 1]: " + std::to_string(v));
    const auto bin = std::min<std::size_t>(kHistogramBins - 1, static_cast<std::size_t>(std::floor(v * kHistogramBins)));
    h.counts[bin]++;
  }
  h.total = values.size();
  if (h.total == 0) return h;
  std::size_t running = 0;
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    running += h.counts[b];
    h.cdf[b] = static_cast<double>(running) / static_cast<double>(h.total);
  }
  return h;
}

CampaignReport summarize(const std::vector<ModelCampaign>& campaigns) {
  CampaignReport report;
  for (const auto& c : campaigns) {
    auto groups = summarize_model(c);
    std::move(groups.begin(), groups.end(), std::back_inserter(report.groups));
  }
  return report;
}

CampaignReport emit_report(const std::vector<ModelCampaign>& campaigns, const std::filesystem::path& dir,
                           const ReportOptions& options) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "hist", ec);
  fs::create_directories(dir / "exemplars", ec);
  if (!fs::is_directory(dir / "hist") || !fs::is_directory(dir / "exemplars")) {
    throw DataError("cannot create report directory " + dir.string());
  }
  const CampaignReport report = summarize(campaigns);

  std::ostringstream summary;
  summary << "models = " << campaigns.size() << '\n';
  summary << "reference.hidden_defect_fraction_band = 0.20-0.30\n";
  summary << "reference.max_iou_different = " << kStrictIouThreshold << '\n';
  summary << "reference.lenet1.keep_unchanged = 0.962\nreference.lenet1.mask_changed = 0.918\n";
  summary << "reference.lenet5.keep_unchanged = 0.969\nreference.lenet5.mask_changed = 0.935\n";
  for (const auto& c : campaigns) {
    const std::string m = "model." + c.model_name + ".";
    const auto it = std::find_if(report.groups.begin(), report.groups.end(),
                                 [&](const GroupStats& g) { return g.model == c.model_name && g.family == "all"; });
    const GroupStats& g = *it;
    summary << m << "tiou = " << fmt(c.tiou) << '\n';
    summary << m << "same_label_pairs = " << g.same << '\n';
    summary << m << "different_label_pairs = " << g.different << '\n';
    summary << m << "attempts = " << c.sets.attempts << '\n';
    summary << m << "cap_hit = " << (c.sets.cap_hit ? "true" : "false") << '\n';
    summary << m << "degenerate_pairs = " << g.degenerate << '\n';
    summary << m << "quadrant.consistent = " << g.quadrants[0] << '\n';
    summary << m << "quadrant.label_changed = " << g.quadrants[1] << '\n';
    summary << m << "quadrant.hidden_defect = " << g.quadrants[2] << '\n';
    summary << m << "quadrant.identical_decision_label_changed = " << g.identical_decision_label_changed << '\n';
    summary << m << "hidden_defect_fraction = " << fmt(g.hidden_defect_fraction()) << '\n';
    summary << m << "strict_below_fraction = "
            << fmt(g.same == 0 ? 0.0 : static_cast<double>(g.strict_below) / static_cast<double>(g.same)) << '\n';
    summary << m << "max_iou_different = " << (g.max_iou_different ? fmt(*g.max_iou_different) : "none") << '\n';
    if (c.validation) {
      const ValidationResult& v = *c.validation;
      summary << m << "validation.evaluated = " << v.evaluated << '\n';
      summary << m << "validation.skipped = " << v.skipped << '\n';
      summary << m << "validation.keep_unchanged_rate = " << fmt(v.keep_unchanged_rate) << '\n';
      summary << m << "validation.mask_changed_rate = " << fmt(v.mask_changed_rate) << '\n';
    }
    summary << m << "seconds = " << fmt(c.seconds) << '\n';
  }
  write_text(dir / "summary.txt", summary.str());

  std::ostringstream groups;
  groups << "model\tfamily\tsame\tdifferent\tconsistent\tlabel_changed\thidden_defect\tdegenerate\t"
            "hidden_defect_fraction\tmax_iou_different\n";
  for (const auto& g : report.groups) {
    groups << g.model << '\t' << g.family << '\t' << g.same << '\t' << g.different << '\t' << g.quadrants[0] << '\t'
           << g.quadrants[1] << '\t' << g.quadrants[2] << '\t' << g.degenerate << '\t'
           << fmt(g.hidden_defect_fraction()) << '\t'
           << (g.max_iou_different ? fmt(*g.max_iou_different) : "none") << '\n';
    std::ostringstream hist;
    hist << "bin_low\tbin_high\tcount\tcdf\n";
    for (std::size_t b = 0; b < kHistogramBins; ++b) {
      hist << fmt(static_cast<double>(b) / kHistogramBins) << '\t' << fmt(static_cast<double>(b + 1) / kHistogramBins)
           << '\t' << g.histogram.counts[b] << '\t' << fmt(g.histogram.cdf[b]) << '\n';
    }
    write_text(dir / "hist" / (file_safe(g.model) + "__" + file_safe(g.family) + ".tsv"), hist.str());
  }
  write_text(dir / "groups.tsv", groups.str());

  std::ostringstream pairs;
  pairs << "model\tseed\tspec\tlabel1\tconf1\tlabel2\tconf2\tiou\tquadrant\tdegenerate\n";
  for (const auto& c : campaigns) {
    std::size_t written = 0;
    for (const auto* set : {&c.sets.same, &c.sets.different}) {
      for (const TestPair& p : *set) {
        pairs << c.model_name << '\t' << p.seed_id << '\t' << format_spec(p.record.spec) << '\t' << p.first.label
              << '\t' << fmt(p.first.confidence) << '\t' << p.second.label << '\t' << fmt(p.second.confidence)
              << '\t' << fmt(p.iou.value) << '\t' << quadrant_name(p.quadrant) << '\t'
              << (p.degenerate() ? "yes" : "no") << '\n';
        if (p.quadrant == Quadrant::HiddenDefect && written < options.exemplars_per_model) {
          write_triptych(p, dir / "exemplars" / (file_safe(c.model_name) + "_" + std::to_string(written) + ".pgm"));
          ++written;
        }
      }
    }
  }
  write_text(dir / "pairs.tsv", pairs.str());
  return report;
}

}  // namespace dmt
