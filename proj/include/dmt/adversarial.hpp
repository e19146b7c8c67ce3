#pragma once

#include <cstddef>
#include <cstdint>

#include "dmt/model.hpp"
#include "dmt/tensor.hpp"

namespace dmt {

/// d CE(softmax(logits(x)), cls) / dx.
Tensor loss_gradient(const Model& model, const Tensor& input, std::size_t cls);

/// clamp01(x + epsilon * sign(grad)), epsilon in [0, 0.3].
Tensor fgsm(const Model& model, const Tensor& input, std::size_t cls, double epsilon);

/// Iterated signed-gradient ascent on the loss of `cls`, projected onto the
/// L-inf ball of radius epsilon around `input` and clamped to [0, 1].
Tensor bim(const Model& model, const Tensor& input, std::size_t cls, double epsilon, std::size_t steps,
           double step_size);

/// BIM from a seeded uniform start inside the ball (or from `input` itself
/// when random_start is false).
Tensor pgd(const Model& model, const Tensor& input, std::size_t cls, double epsilon, std::size_t steps,
           double step_size, std::uint64_t seed, bool random_start = true);

}  // namespace dmt
