#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dmt/model.hpp"
#include "dmt/tensor.hpp"

namespace dmt {

/// Per-call activation record. activations[k] is the input of layer k and
/// activations.back() the logits.
struct Trace {
  std::vector<Tensor> activations;

  const Tensor& logits() const { return activations.back(); }
};

struct Prediction {
  std::size_t label = 0;
  float confidence = 0.0f;  // softmax probability of `label`
};

/// Runs every layer and keeps the activations. Throws ShapeError (naming the
/// layer) on a mismatched input and NumericError on non-finite activations.
Trace forward(const Model& model, const Tensor& input);

Tensor logits(const Model& model, const Tensor& input);

/// Max-subtracted softmax, computed in double.
std::vector<float> softmax(std::span<const float> logits);

/// argmax with ties resolved to the lowest index.
Prediction predict_from_logits(std::span<const float> logits);
Prediction predict(const Model& model, const Tensor& input);

/// Single layer of the chain rule: maps d(out) to d(in) given the layer's
/// forward input. MaxPool routes to the window argmax.
Tensor layer_backward(const Layer& layer, const Tensor& input, const Shape& output_shape, const Tensor& grad_output);

/// d(output_grad . logits) / d(input) for a recorded trace.
Tensor backpropagate(const Model& model, const Trace& trace, const Tensor& output_grad);

/// d logit[cls] / d input.
Tensor input_gradient(const Model& model, const Tensor& input, std::size_t cls);

}  // namespace dmt
