// dmt: decision-level metamorphic testing from the command line.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmt/attribution.hpp"
#include "dmt/bench.hpp"
#include "dmt/concept.hpp"
#include "dmt/engine.hpp"
#include "dmt/error.hpp"
#include "dmt/harness.hpp"
#include "dmt/idx.hpp"
#include "dmt/model_io.hpp"
#include "dmt/mutation.hpp"
#include "dmt/pnm.hpp"
#include "dmt/report.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUnexpected = 1, kConfig = 2, kData = 3, kNumeric = 4, kShape = 5 };

struct Options {
  std::vector<std::string> models;
  std::string image;
  std::string data;
  std::string labels;
  std::string baseline = "zeros";
  std::string out;
  std::vector<std::string> mrt;
  std::vector<std::string> specs;
  std::optional<std::size_t> index;
  std::optional<std::size_t> cls;
  std::size_t target = 1000;
  std::size_t max_attempts = 0;
  std::size_t limit = 0;
  std::size_t exemplars = 8;
  double tiou = dmt::kDefaultIouThreshold;
  bool strict = false;
  bool validate = false;
  double seconds = 5.0;
  std::uint64_t seed = 1;
  int jobs = 0;
  bool quiet = false;
};

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw dmt::ConfigError(std::string("missing --") + what);
  std::error_code ec;
  if (!fs::exists(path, ec)) throw dmt::DataError(std::string(what) + " '" + path + "' does not exist");
}

std::string model_name(const std::string& path) { return fs::path(path).stem().string(); }

// A directory of PGM/PPM files (sorted by name) or an IDX image file with
// optional labels.
std::vector<dmt::ImageRecord> load_dataset(const Options& o) {
  std::vector<dmt::ImageRecord> records;
  if (fs::is_directory(o.data)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(o.data)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) records.push_back({dmt::load_pnm(f), f.filename().string(), std::nullopt});
  } else if (!o.labels.empty()) {
    records = dmt::load_idx_dataset(o.data, o.labels);
  } else {
    records = dmt::load_idx_images(o.data);
  }
  if (records.empty()) throw dmt::DataError("no images found in '" + o.data + "'");
  if (o.limit > 0 && records.size() > o.limit) records.resize(o.limit);
  return records;
}

dmt::Baseline make_baseline(const Options& o, const std::vector<dmt::ImageRecord>* dataset) {
  if (o.baseline == "zeros") return dmt::Baseline::zeros();
  if (o.baseline == "mean") {
    if (dataset == nullptr) throw dmt::ConfigError("--baseline mean needs --data");
    return dmt::Baseline::dataset_mean(dmt::mean_image(*dataset));
  }
  return dmt::Baseline::custom(dmt::load_pnm(o.baseline));
}

dmt::HarnessConfig harness_config(const Options& o, const std::vector<dmt::ImageRecord>* dataset) {
  dmt::HarnessConfig c;
  c.tiou = o.strict ? dmt::kStrictIouThreshold : o.tiou;
  if (!(c.tiou >= 0.0 && c.tiou <= 1.0)) throw dmt::ConfigError("--tiou must lie in [0, 1]");
  c.baseline = make_baseline(o, dataset);
  return c;
}

void check_common_paths(const Options& o, bool need_data) {
  if (o.models.empty()) throw dmt::ConfigError("missing --model");
  for (const auto& m : o.models) require_file(m, "model");
  if (need_data) require_file(o.data, "data");
  if (!o.labels.empty()) require_file(o.labels, "labels");
  if (o.baseline != "zeros" && o.baseline != "mean") require_file(o.baseline, "baseline");
}

void note(const Options& o, const std::string& line) {
  if (!o.quiet) std::cout << line << '\n';
}

// ---------------------------------------------------------------------------

int cmd_attribute(const Options& o) {
  check_common_paths(o, o.image.empty());
  if (!o.image.empty()) require_file(o.image, "image");
  if (o.out.empty()) throw dmt::ConfigError("missing --out");
  const dmt::Model model = dmt::load_model(o.models.front());

  std::vector<dmt::ImageRecord> dataset;
  dmt::Tensor image;
  if (!o.image.empty()) {
    image = dmt::load_pnm(o.image);
  } else {
    dataset = load_dataset(o);
    const std::size_t i = o.index.value_or(0);
    if (i >= dataset.size()) throw dmt::ConfigError("--index " + std::to_string(i) + " is out of range");
    image = dataset[i].pixels;
  }
  const dmt::HarnessConfig config = harness_config(o, dataset.empty() ? nullptr : &dataset);
  const dmt::Prediction prediction = dmt::predict(model, image);
  const std::size_t cls = o.cls.value_or(prediction.label);
  const dmt::AttributionMap map = dmt::deeplift_attribute(model, image, cls, config.baseline);
  const dmt::Decision decision = dmt::to_concepts(map.scores, config.concepts);

  fs::create_directories(o.out);
  const fs::path out(o.out);
  dmt::save_field_pgm(map.scores, out / "scores.pgm");
  dmt::save_field_pgm(dmt::positive_support(map), out / "support.pgm");
  dmt::save_mask_pgm(decision.mask, out / "decision.pgm");
  std::ofstream(out / "concepts.txt") << dmt::format_concepts(decision);
  {
    std::ofstream scores(out / "scores.tsv");
    for (std::size_t y = 0; y < map.scores.height(); ++y) {
      for (std::size_t x = 0; x < map.scores.width(); ++x) {
        scores << (x ? "\t" : "") << map.scores.at(y, x);
      }
      scores << '\n';
    }
  }
  std::ofstream summary(out / "attribution.txt");
  summary << "predicted " << prediction.label << '\n'
          << "confidence " << prediction.confidence << '\n'
          << "class " << cls << '\n'
          << "delta " << map.delta << '\n'
          << "completeness_gap " << dmt::completeness_gap(map) << '\n'
          << "concepts " << decision.concepts.size() << '\n'
          << "decision_pixels " << dmt::count(decision.mask) << '\n'
          << "degenerate " << (decision.degenerate ? "yes" : "no") << '\n';
  note(o, "class " + std::to_string(cls) + ": " + std::to_string(decision.concepts.size()) + " concepts, " +
              std::to_string(dmt::count(decision.mask)) + " pixels");
  return kOk;
}

int cmd_mutate(const Options& o) {
  require_file(o.image, "image");
  if (o.specs.size() != 1) throw dmt::ConfigError("mutate needs exactly one --spec");
  if (o.out.empty()) throw dmt::ConfigError("missing --out");
  for (const auto& m : o.models) require_file(m, "model");
  const dmt::MutationSpec spec = dmt::parse_spec(o.specs.front());
  std::optional<dmt::Model> model;
  if (!o.models.empty()) model = dmt::load_model(o.models.front());
  if (dmt::is_adversarial(spec) && !model) throw dmt::ConfigError("adversarial specs need --model");

  const dmt::Tensor image = dmt::load_pnm(o.image);
  dmt::check_ranges(spec, dmt::MutationRanges{}, image.dim(1), image.dim(2));
  const dmt::MutationResult result = dmt::mutate(image, spec, model ? &*model : nullptr);
  dmt::save_pnm(result.image, o.out);
  note(o, dmt::format_spec(spec));
  return kOk;
}

std::vector<dmt::MutationSpec> fixed_specs(const Options& o, std::size_t h, std::size_t w) {
  std::vector<dmt::MutationSpec> specs;
  const dmt::MutationRanges ranges;
  for (const auto& line : o.specs) {
    specs.push_back(dmt::parse_spec(line));
    dmt::check_ranges(specs.back(), ranges, h, w);
  }
  return specs;
}

std::vector<dmt::Family> families(const Options& o, std::size_t channels) {
  std::vector<dmt::Family> out;
  std::vector<std::string> names = o.mrt;
  if (names.empty() && o.specs.empty()) names = {"all"};
  for (const auto& n : names) {
    if (n == "all") {
      for (int f = 0; f <= static_cast<int>(dmt::Family::Pgd); ++f) {
        const auto fam = static_cast<dmt::Family>(f);
        if (!dmt::family_needs_rgb(fam) || channels == 3) out.push_back(fam);
      }
    } else {
      out.push_back(dmt::parse_family(n));
    }
  }
  return out;
}

dmt::PairSetOptions pair_options(const Options& o, const dmt::Tensor& sample) {
  dmt::PairSetOptions p;
  p.target_size = o.target;
  p.max_attempts = o.max_attempts;
  p.seed = o.seed;
  p.fixed_specs = fixed_specs(o, sample.dim(1), sample.dim(2));
  if (p.fixed_specs.empty()) p.families = families(o, sample.dim(0));
  return p;
}

int cmd_test(const Options& o) {
  check_common_paths(o, true);
  if (o.out.empty()) throw dmt::ConfigError("missing --out");
  std::vector<dmt::Model> models;
  for (const auto& m : o.models) models.push_back(dmt::load_model(m));
  const auto dataset = load_dataset(o);
  const dmt::HarnessConfig config = harness_config(o, &dataset);
  const dmt::PairSetOptions options = pair_options(o, dataset.front().pixels);

  std::vector<dmt::ModelCampaign> campaigns;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    dmt::ModelCampaign c;
    c.model_name = model_name(o.models[i]);
    c.tiou = config.tiou;
    c.sets = dmt::build_pair_sets(models[i], dataset, options, config);
    if (o.validate) {
      std::vector<dmt::TestPair> pairs = c.sets.same;
      pairs.insert(pairs.end(), c.sets.different.begin(), c.sets.different.end());
      c.validation = dmt::validate_decisions(models[i], pairs, config.baseline);
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.sets.cap_hit) {
      std::cerr << "warning: " << c.model_name << ": attempt cap reached after " << c.sets.attempts
                << " attempts (same " << c.sets.same.size() << ", different " << c.sets.different.size() << ")\n";
    }
    campaigns.push_back(std::move(c));
  }
  const dmt::CampaignReport report = dmt::emit_report(campaigns, o.out, {o.exemplars});
  for (const auto& g : report.groups) {
    if (g.family != "all") continue;
    note(o, g.model + ": same " + std::to_string(g.same) + ", different " + std::to_string(g.different) +
                ", consistent " + std::to_string(g.quadrants[0]) + ", label-changed " +
                std::to_string(g.quadrants[1]) + ", hidden-defect " + std::to_string(g.quadrants[2]) +
                ", max IoU (different) " +
                (g.max_iou_different ? std::to_string(*g.max_iou_different) : std::string("none")));
  }
  return kOk;
}

int cmd_validate(const Options& o) {
  check_common_paths(o, true);
  std::vector<dmt::Model> models;
  for (const auto& m : o.models) models.push_back(dmt::load_model(m));
  const auto dataset = load_dataset(o);
  const dmt::HarnessConfig config = harness_config(o, &dataset);
  const dmt::PairSetOptions options = pair_options(o, dataset.front().pixels);

  std::ostringstream text;
  for (std::size_t m = 0; m < models.size(); ++m) {
    dmt::PairSets sets = dmt::build_pair_sets(models[m], dataset, options, config);
    std::vector<dmt::TestPair> pairs = std::move(sets.same);
    std::move(sets.different.begin(), sets.different.end(), std::back_inserter(pairs));
    const dmt::ValidationResult r = dmt::validate_decisions(models[m], pairs, config.baseline);
    const std::string name = model_name(o.models[m]);
    text << name << ".pairs = " << pairs.size() << '\n'
         << name << ".evaluated = " << r.evaluated << '\n'
         << name << ".skipped = " << r.skipped << '\n'
         << name << ".keep_unchanged_rate = " << r.keep_unchanged_rate << '\n'
         << name << ".mask_changed_rate = " << r.mask_changed_rate << '\n';
  }
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    std::ofstream(fs::path(o.out) / "validation.txt") << text.str();
  }
  if (!o.quiet) std::cout << text.str();
  return kOk;
}

int cmd_bench(const Options& o) {
  check_common_paths(o, true);
  const dmt::Model model = dmt::load_model(o.models.front());
  const auto dataset = load_dataset(o);
  const dmt::HarnessConfig config = harness_config(o, &dataset);
  const dmt::BenchResult r = dmt::run_bench(model, dataset, o.seconds, config);
  std::ostringstream text;
  text << "plain_per_minute = " << r.plain_rate() * 60.0 << '\n'
       << "decision_per_minute = " << r.decision_rate() * 60.0 << '\n'
       << "slowdown = " << r.slowdown() << '\n'
       << "reference_slowdown_band = 2.3-4\n";
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    std::ofstream(fs::path(o.out) / "bench.txt") << text.str();
  }
  std::cout << text.str();
  return kOk;
}

// ---------------------------------------------------------------------------

void add_model(CLI::App* app, Options& o, bool many) {
  auto* opt = app->add_option("--model,-m", o.models, many ? "model container(s)" : "model container");
  opt->envname("DMT_MODEL");
  if (!many) opt->expected(1);
}

void add_data(CLI::App* app, Options& o) {
  app->add_option("--data,-d", o.data, "IDX image file or directory of PGM/PPM images")->envname("DMT_DATA");
  app->add_option("--labels", o.labels, "IDX label file")->envname("DMT_LABELS");
  app->add_option("--limit", o.limit, "use at most this many images (0 = all)");
}

void add_harness(CLI::App* app, Options& o) {
  app->add_option("--baseline", o.baseline, "zeros, mean, or a PGM/PPM file")->envname("DMT_BASELINE");
  app->add_option("--tiou", o.tiou, "IoU threshold for decision consistency")->envname("DMT_TIOU");
  app->add_flag("--strict", o.strict, "use the 0.8 IoU threshold");
}

int exit_code(dmt::ErrorCategory c) {
  switch (c) {
    case dmt::ErrorCategory::Config: return kConfig;
    case dmt::ErrorCategory::Data: return kData;
    case dmt::ErrorCategory::Numeric: return kNumeric;
    case dmt::ErrorCategory::Shape: return kShape;
  }
  return kUnexpected;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Decision-level metamorphic testing for small image classifiers"};
  app.set_config("--config", "", "TOML campaign file");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--jobs,-j", o.jobs, "worker threads (0 = OpenMP default)")->envname("DMT_JOBS");
  app.add_option("--seed", o.seed, "random seed")->envname("DMT_SEED");
  app.add_flag("--quiet,-q", o.quiet, "suppress progress output");

  auto* attribute = app.add_subcommand("attribute", "dump attribution scores, decision mask and concepts");
  add_model(attribute, o, false);
  attribute->add_option("--image,-i", o.image, "PGM/PPM input image");
  add_data(attribute, o);
  attribute->add_option("--index", o.index, "image index within --data");
  attribute->add_option("--class", o.cls, "target class (default: predicted)");
  add_harness(attribute, o);
  attribute->add_option("--out,-o", o.out, "output directory")->envname("DMT_OUT");

  auto* mutate = app.add_subcommand("mutate", "apply one mutation to an image");
  mutate->add_option("--image,-i", o.image, "PGM/PPM input image");
  mutate->add_option("--spec,-s", o.specs, "mutation spec, e.g. \"brightness 0.1\"");
  add_model(mutate, o, false);
  mutate->add_option("--out,-o", o.out, "output PGM/PPM file");

  auto* test = app.add_subcommand("test", "run a metamorphic testing campaign");
  add_model(test, o, true);
  add_data(test, o);
  add_harness(test, o);
  test->add_option("--mrt", o.mrt, "mutation families to sample (or \"all\")")->delimiter(',')->envname("DMT_MRT");
  test->add_option("--spec,-s", o.specs, "fixed mutation specs, cycled in order");
  test->add_option("--target", o.target, "pairs per set");
  test->add_option("--max-attempts", o.max_attempts, "attempt cap (0 = 50 x target)");
  test->add_option("--exemplars", o.exemplars, "hidden-defect triptychs per model");
  test->add_flag("--validate", o.validate, "also run keep-only / mask validation on every pair");
  test->add_option("--out,-o", o.out, "report directory")->envname("DMT_OUT");

  auto* validate = app.add_subcommand("validate", "check decisions by keeping only / masking them");
  add_model(validate, o, true);
  add_data(validate, o);
  add_harness(validate, o);
  validate->add_option("--mrt", o.mrt, "mutation families to sample (or \"all\")")->delimiter(',')->envname("DMT_MRT");
  validate->add_option("--spec,-s", o.specs, "fixed mutation specs, cycled in order");
  validate->add_option("--target", o.target, "pairs per set");
  validate->add_option("--max-attempts", o.max_attempts, "attempt cap (0 = 50 x target)");
  validate->add_option("--out,-o", o.out, "output directory")->envname("DMT_OUT");

  auto* bench = app.add_subcommand("bench", "inference throughput with and without decision extraction");
  add_model(bench, o, false);
  add_data(bench, o);
  add_harness(bench, o);
  bench->add_option("--seconds", o.seconds, "time budget per mode");
  bench->add_option("--out,-o", o.out, "output directory")->envname("DMT_OUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (o.jobs < 0) throw dmt::ConfigError("--jobs must not be negative");
    if (o.jobs > 0) omp_set_num_threads(o.jobs);
    if (*attribute) return cmd_attribute(o);
    if (*mutate) return cmd_mutate(o);
    if (*test) return cmd_test(o);
    if (*validate) return cmd_validate(o);
    if (*bench) return cmd_bench(o);
  } catch (const dmt::ModelIoError& e) {
    std::cerr << "error: model: " << e.what() << " [" << dmt::to_string(e.code()) << "]\n";
    return kData;
  } catch (const dmt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}
