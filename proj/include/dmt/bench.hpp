#pragma once

#include <cstddef>
#include <vector>

#include "dmt/harness.hpp"
#include "dmt/idx.hpp"
#include "dmt/model.hpp"

namespace dmt {

struct BenchResult {
  std::size_t plain_inferences = 0;
  std::size_t decision_inferences = 0;
  double plain_seconds = 0.0;
  double decision_seconds = 0.0;

  double plain_rate() const noexcept { return plain_seconds > 0 ? plain_inferences / plain_seconds : 0.0; }
  double decision_rate() const noexcept { return decision_seconds > 0 ? decision_inferences / decision_seconds : 0.0; }
  /// plain throughput / with-decision throughput.
  double slowdown() const noexcept { return decision_rate() > 0 ? plain_rate() / decision_rate() : 0.0; }
};

/// Cycles through `images` for roughly `seconds` per mode: first plain
/// prediction, then prediction plus attribution and concept extraction.
/// Both modes run under the same thread settings.
BenchResult run_bench(const Model& model, const std::vector<ImageRecord>& images, double seconds,
                      const HarnessConfig& config);

}  // namespace dmt
