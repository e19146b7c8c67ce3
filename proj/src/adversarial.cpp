#include "dmt/adversarial.hpp"

#include <algorithm>
#include <random>

#include "dmt/engine.hpp"
#include "dmt/error.hpp"

namespace dmt {

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 0.3)) {
    throw ConfigError("adversarial epsilon must lie in [0, 0.3], got " + std::to_string(epsilon));
  }
}

void check_steps(double epsilon, std::size_t steps, double step_size) {
  check_epsilon(epsilon);
  if (steps == 0) throw ConfigError("iterative attack needs at least one step");
  if (!(step_size > 0.0 && step_size <= epsilon)) {
    throw ConfigError("step size must lie in (0, epsilon]");
  }
}

float sign(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

// One signed step from `current`, projected onto [origin - eps, origin + eps]
// and then onto [0, 1].
void signed_step(Tensor& current, const Tensor& origin, const Tensor& grad, float step, float epsilon) {
  for (std::size_t i = 0; i < current.size(); ++i) {
    float v = current[i] + step * sign(grad[i]);
    v = std::clamp(v, origin[i] - epsilon, origin[i] + epsilon);
    current[i] = std::clamp(v, 0.0f, 1.0f);
  }
}

Tensor iterate(const Model& model, const Tensor& origin, Tensor current, std::size_t cls, double epsilon,
               std::size_t steps, double step_size) {
  for (std::size_t s = 0; s < steps; ++s) {
    const Tensor grad = loss_gradient(model, current, cls);
    signed_step(current, origin, grad, static_cast<float>(step_size), static_cast<float>(epsilon));
  }
  return current;
}

}  // namespace

Tensor loss_gradient(const Model& model, const Tensor& input, std::size_t cls) {
  if (cls >= model.num_classes()) throw ConfigError("class index out of range");
  const Trace trace = forward(model, input);
  const auto probs = softmax(trace.logits().values());
  Tensor seed({model.num_classes()});
  for (std::size_t i = 0; i < probs.size(); ++i) seed[i] = probs[i] - (i == cls ? 1.0f : 0.0f);
  return backpropagate(model, trace, seed);
}

Tensor fgsm(const Model& model, const Tensor& input, std::size_t cls, double epsilon) {
  check_epsilon(epsilon);
  Tensor out = input;
  if (epsilon == 0.0) return out;
  signed_step(out, input, loss_gradient(model, input, cls), static_cast<float>(epsilon), static_cast<float>(epsilon));
  return out;
}

Tensor bim(const Model& model, const Tensor& input, std::size_t cls, double epsilon, std::size_t steps,
           double step_size) {
  check_steps(epsilon, steps, step_size);
  return iterate(model, input, input, cls, epsilon, steps, step_size);
}

Tensor pgd(const Model& model, const Tensor& input, std::size_t cls, double epsilon, std::size_t steps,
           double step_size, std::uint64_t seed, bool random_start) {
  check_steps(epsilon, steps, step_size);
  Tensor start = input;
  if (random_start) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> jitter(static_cast<float>(-epsilon), static_cast<float>(epsilon));
    for (std::size_t i = 0; i < start.size(); ++i) start[i] = std::clamp(input[i] + jitter(rng), 0.0f, 1.0f);
  }
  return iterate(model, input, std::move(start), cls, epsilon, steps, step_size);
}

}  // namespace dmt
