#include "dmt/bench.hpp"

#include <chrono>

#include "dmt/error.hpp"

namespace dmt {

namespace {

template <class Step>
std::pair<std::size_t, double> timed_loop(std::size_t n, double budget, Step&& step) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  std::size_t done = 0;
  double elapsed = 0.0;
  do {
    step(done % n);
    ++done;
    elapsed = std::chrono::duration<double>(clock::now() - start).count();
  } while (elapsed < budget);
  return {done, elapsed};
}

}  // namespace

BenchResult run_bench(const Model& model, const std::vector<ImageRecord>& images, double seconds,
                      const HarnessConfig& config) {
  if (images.empty()) throw DataError("benchmark needs at least one image");
  if (!(seconds > 0.0)) throw ConfigError("benchmark duration must be positive");
  const Decider decider(model, config);
  BenchResult r;
  std::size_t sink = 0;
  std::tie(r.plain_inferences, r.plain_seconds) =
      timed_loop(images.size(), seconds, [&](std::size_t i) { sink += predict(model, images[i].pixels).label; });
  std::tie(r.decision_inferences, r.decision_seconds) = timed_loop(images.size(), seconds, [&](std::size_t i) {
    sink += decider.decide(images[i].pixels).decision.concepts.size();
  });
  static_cast<void>(sink);
  return r;
}

}  // namespace dmt
