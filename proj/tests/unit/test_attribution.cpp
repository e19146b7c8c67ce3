#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "dmt/attribution.hpp"
#include "dmt/engine.hpp"
#include "dmt/error.hpp"
#include "support.hpp"

using namespace dmt;
using dmt::testing::Rng;

namespace {

double tolerance(const AttributionMap& map) { return 1e-3 * std::max(1.0, std::abs(map.delta)); }

// Exact Shapley values of logit[cls], with absent features set to the baseline.
std::vector<double> shapley(const Model& model, const Tensor& x, const Tensor& base, std::size_t cls) {
  const std::size_t n = x.size();
  std::vector<double> value(std::size_t{1} << n);
  for (std::size_t s = 0; s < value.size(); ++s) {
    Tensor probe = base;
    for (std::size_t i = 0; i < n; ++i) {
      if (s & (std::size_t{1} << i)) probe[i] = x[i];
    }
    value[s] = logits(model, probe)[cls];
  }
  std::vector<double> fact(n + 1, 1.0);
  for (std::size_t i = 1; i <= n; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t s = 0; s < value.size(); ++s) {
      if (s & bit) continue;
      const auto k = static_cast<std::size_t>(std::popcount(s));
      phi[i] += fact[k] * fact[n - k - 1] / fact[n] * (value[s | bit] - value[s]);
    }
  }
  return phi;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) r[order[i]] = static_cast<double>(i);
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace

TEST_CASE("linear model contributions equal weight times input difference") {
  Rng rng(20);
  const Dense dense = testing::random_dense(3, 12, rng);
  const Model m({3, 2, 2}, {Flatten{}, dense});
  const Tensor x = testing::random_tensor({3, 2, 2}, rng);
  const Tensor b = testing::random_tensor({3, 2, 2}, rng);
  for (std::size_t cls = 0; cls < 3; ++cls) {
    const auto map = deeplift_attribute(m, x, cls, Baseline::custom(b));
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(map.contributions[i] == doctest::Approx(dense.weight[cls * 12 + i] * (x[i] - b[i])).epsilon(1e-5));
    }
    // Scores sum the three channels of each pixel.
    for (std::size_t p = 0; p < 4; ++p) {
      const double expect = map.contributions[p] + map.contributions[4 + p] + map.contributions[8 + p];
      CHECK(map.scores[p] == doctest::Approx(expect).epsilon(1e-5));
    }
    CHECK(completeness_gap(map) <= tolerance(map));
  }
}

TEST_CASE("input equal to the baseline gives an all-zero map") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Model m = testing::random_model(rng, {.allow_maxpool = true});
    const Tensor x = testing::random_tensor(m.input_shape(), rng);
    const auto map = deeplift_attribute(m, x, 0, Baseline::custom(x));
    CHECK(map.delta == 0.0);
    for (float v : map.contributions.values()) CHECK(v == 0.0f);
  }
}

TEST_CASE("completeness on random maxpool-free models") {
  Rng rng(22);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Model m = testing::random_model(rng);
    const Tensor x = testing::random_tensor(m.input_shape(), rng);
    const Baseline base = trial % 2 ? Baseline::zeros() : Baseline::custom(testing::random_tensor(m.input_shape(), rng));
    const std::size_t cls = static_cast<std::size_t>(trial) % m.num_classes();
    const auto map = deeplift_attribute(m, x, cls, base);
    CHECK(map.delta == doctest::Approx(map.input_logit - map.baseline_logit));
    worst = std::max(worst, completeness_gap(map) / tolerance(map));
  }
  CHECK(worst <= 1.0);
}

TEST_CASE("four-pixel models against brute-force Shapley values") {
  Rng rng(23);
  double correlation = 0.0;
  const int trials = 30;
  for (int trial = 0; trial < trials; ++trial) {
    const Model m({1, 2, 2}, {Flatten{}, testing::random_dense(5, 4, rng), ReLU{}, testing::random_dense(2, 5, rng)});
    const Tensor x = testing::random_tensor({1, 2, 2}, rng);
    const Tensor b = testing::random_tensor({1, 2, 2}, rng);
    const auto phi = shapley(m, x, b, 1);
    const auto map = deeplift_attribute(m, x, 1, Baseline::custom(b));
    const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
    CHECK(total == doctest::Approx(map.delta).epsilon(1e-4));  // Shapley efficiency
    CHECK(completeness_gap(map) <= tolerance(map));
    std::vector<double> c(map.contributions.values().begin(), map.contributions.values().end());
    correlation += spearman(c, phi);
  }
  MESSAGE("mean Spearman correlation DeepLIFT vs Shapley: " << correlation / trials);
  CHECK(correlation / trials > 0.5);
}

TEST_CASE("maxpool routes multipliers to the window winner") {
  const Model m({1, 2, 2}, {MaxPool{2, 2}, Flatten{}, Dense{Tensor({1, 1}, {2.0f}), Tensor({1}, {0.0f})}});
  const Tensor x({1, 2, 2}, {0.1f, 0.9f, 0.3f, 0.2f});
  const auto map = deeplift_attribute(m, x, 0, Baseline::zeros());
  CHECK(map.contributions[0] == 0.0f);
  CHECK(map.contributions[1] == doctest::Approx(1.8f));
  CHECK(map.contributions[2] == 0.0f);
  CHECK(map.contributions[3] == 0.0f);
}

TEST_CASE("positive support clamps negative scores") {
  const Model m({1, 1, 2}, {Flatten{}, Dense{Tensor({1, 2}, {1.0f, -1.0f}), Tensor({1}, {0.0f})}});
  const auto map = deeplift_attribute(m, Tensor({1, 1, 2}, {0.5f, 0.5f}), 0, Baseline::zeros());
  const ScoreField pos = positive_support(map);
  CHECK(pos[0] == doctest::Approx(0.5f));
  CHECK(pos[1] == 0.0f);
}

TEST_CASE("baselines validate their values and shapes") {
  CHECK_THROWS_AS(Baseline::dataset_mean(Tensor({1, 2, 2}, 1.5f)), ConfigError);
  CHECK_THROWS_AS(Baseline::custom(Tensor({1, 2, 2}, -0.1f)), ConfigError);
  CHECK_THROWS_AS(Baseline::custom(Tensor({1, 2, 2}, std::nanf(""))), ConfigError);
  CHECK_THROWS_AS(Baseline::custom(Tensor({1, 2, 2}, 0.5f)).resolve({1, 3, 3}), ShapeError);
  CHECK(Baseline::zeros().resolve({1, 3, 3}) == Tensor({1, 3, 3}, 0.0f));
  CHECK(Baseline::dataset_mean(Tensor({1, 2, 2}, 0.25f)).kind() == Baseline::Kind::DatasetMean);

  Rng rng(24);
  const Model m = testing::random_model(rng);
  const Tensor x = testing::random_tensor(m.input_shape(), rng);
  CHECK_THROWS_AS(deeplift_attribute(m, x, m.num_classes(), Baseline::zeros()), ConfigError);
  CHECK_THROWS_AS(deeplift_attribute(m, Tensor({shape_size(m.input_shape())}, 0.5f), 0, Baseline::zeros()), ShapeError);
}
