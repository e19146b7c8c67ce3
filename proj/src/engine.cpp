#include "dmt/engine.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

#include "dmt/error.hpp"
#include "dmt/kernels.hpp"

namespace dmt {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

kernels::ConvGeometry conv_geometry(const Conv2d& conv, const Shape& in) {
  return {in[0], in[1], in[2], conv.out_channels(), conv.kernel(), conv.stride, conv.padding};
}

template <class Pool>
kernels::PoolGeometry pool_geometry(const Pool& pool, const Shape& in) {
  return {in[0], in[1], in[2], pool.kernel, pool.stride};
}

Tensor layer_forward(const Layer& layer, const Tensor& in, const Shape& out_shape) {
  Tensor out(out_shape);
  std::visit(Overloaded{
                 [&](const Conv2d& conv) {
                   kernels::conv2d_forward(conv_geometry(conv, in.shape()), in.values(), conv.weight.values(),
                                           conv.bias.values(), out.values());
                 },
                 [&](const Dense& dense) {
                   kernels::dense_forward(dense.in_features(), dense.out_features(), in.values(),
                                          dense.weight.values(), dense.bias.values(), out.values());
                 },
                 [&](const ReLU&) {
                   std::transform(in.values().begin(), in.values().end(), out.values().begin(),
                                  [](float v) { return v > 0.0f ? v : 0.0f; });
                 },
                 [&](const AvgPool& pool) {
                   kernels::avgpool_forward(pool_geometry(pool, in.shape()), in.values(), out.values());
                 },
                 [&](const MaxPool& pool) {
                   kernels::maxpool_forward(pool_geometry(pool, in.shape()), in.values(), out.values());
                 },
                 [&](const Flatten&) { std::copy(in.values().begin(), in.values().end(), out.values().begin()); },
             },
             layer);
  return out;
}

}  // namespace

Trace forward(const Model& model, const Tensor& input) {
  if (input.shape() != model.input_shape()) {
    throw ShapeError("input " + shape_to_string(input.shape()) + " does not match model input " +
                         shape_to_string(model.input_shape()),
                     0);
  }
  Trace trace;
  trace.activations.reserve(model.layers().size() + 1);
  trace.activations.push_back(input);
  const auto& shapes = model.shapes();
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    trace.activations.push_back(layer_forward(model.layers()[i], trace.activations.back(), shapes[i + 1]));
  }
  if (!trace.logits().all_finite()) throw NumericError("forward pass produced non-finite logits");
  return trace;
}

Tensor logits(const Model& model, const Tensor& input) {
  return std::move(forward(model, input).activations.back());
}

std::vector<float> softmax(std::span<const float> logits) {
  std::vector<float> out(logits.size());
  if (logits.empty()) return out;
  const float peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  std::vector<double> e(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits[i]) - peak);
    total += e[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<float>(e[i] / total);
  return out;
}

Prediction predict_from_logits(std::span<const float> logits) {
  if (logits.empty()) throw ShapeError("cannot predict from empty logits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return {best, softmax(logits)[best]};
}

Prediction predict(const Model& model, const Tensor& input) {
  const Tensor out = logits(model, input);
  return predict_from_logits(out.values());
}

Tensor layer_backward(const Layer& layer, const Tensor& input, const Shape& output_shape, const Tensor& grad_output) {
  if (grad_output.shape() != output_shape) {
    throw ShapeError("gradient " + shape_to_string(grad_output.shape()) + " does not match layer output " +
                     shape_to_string(output_shape));
  }
  Tensor grad(input.shape());
  std::visit(Overloaded{
                 [&](const Conv2d& conv) {
                   kernels::conv2d_backward_input(conv_geometry(conv, input.shape()), grad_output.values(),
                                                  conv.weight.values(), grad.values());
                 },
                 [&](const Dense& dense) {
                   kernels::dense_backward_input(dense.in_features(), dense.out_features(), grad_output.values(),
                                                 dense.weight.values(), grad.values());
                 },
                 [&](const ReLU&) {
                   for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = input[i] > 0.0f ? grad_output[i] : 0.0f;
                 },
                 [&](const AvgPool& pool) {
                   kernels::avgpool_backward(pool_geometry(pool, input.shape()), grad_output.values(), grad.values());
                 },
                 [&](const MaxPool& pool) {
                   kernels::maxpool_backward(pool_geometry(pool, input.shape()), input.values(), grad_output.values(),
                                             grad.values());
                 },
                 [&](const Flatten&) {
                   std::copy(grad_output.values().begin(), grad_output.values().end(), grad.values().begin());
                 },
             },
             layer);
  return grad;
}

Tensor backpropagate(const Model& model, const Trace& trace, const Tensor& output_grad) {
  const auto& layers = model.layers();
  if (trace.activations.size() != layers.size() + 1) throw ShapeError("trace does not belong to this model");
  Tensor grad = output_grad;
  for (std::size_t i = layers.size(); i-- > 0;) {
    grad = layer_backward(layers[i], trace.activations[i], model.shapes()[i + 1], grad);
  }
  if (!grad.all_finite()) throw NumericError("backward pass produced non-finite gradient");
  return grad;
}

Tensor input_gradient(const Model& model, const Tensor& input, std::size_t cls) {
  if (cls >= model.num_classes()) {
    throw ConfigError("class " + std::to_string(cls) + " out of range for " + std::to_string(model.num_classes()) +
                      " classes");
  }
  const Trace trace = forward(model, input);
  Tensor seed({model.num_classes()});
  seed[cls] = 1.0f;
  return backpropagate(model, trace, seed);
}

}  // namespace dmt
