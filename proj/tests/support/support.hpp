#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "dmt/grid.hpp"
#include "dmt/layers.hpp"
#include "dmt/model.hpp"
#include "dmt/tensor.hpp"

namespace dmt::testing {

using Rng = std::mt19937_64;

std::filesystem::path fixture(const std::string& name);

Tensor random_tensor(const Shape& shape, Rng& rng, float lo = 0.0f, float hi = 1.0f);

/// Conv (out, in, k, k) / Dense (out, in) with weights ~ N(0, 1/fan_in).
Conv2d random_conv(std::size_t out, std::size_t in, std::size_t k, std::size_t stride, std::size_t padding, Rng& rng);
Dense random_dense(std::size_t out, std::size_t in, Rng& rng);

struct RandomModelOptions {
  bool allow_maxpool = false;
  std::size_t max_classes = 6;
};

/// Small CNN: 1-2 conv blocks (optionally pooled), flatten, 1-2 dense layers.
Model random_model(Rng& rng, const RandomModelOptions& options = {});

/// A model that exercises `kind` (conv, dense, relu, avgpool, maxpool or
/// flatten) between simple linear layers.
Model probe_model(LayerKind kind, Rng& rng);

/// Smallest distance of any ReLU input to 0 and of any max-pool winner to its
/// runner-up, over one forward pass. Finite differences are only meaningful
/// when the step stays below this.
double kink_distance(const Model& model, const Tensor& input);

/// Central-difference gradient of logit[cls] with step h.
Tensor numeric_gradient(const Model& model, const Tensor& input, std::size_t cls, float h);

BinaryMask random_mask(std::size_t h, std::size_t w, double density, Rng& rng);

}  // namespace dmt::testing
