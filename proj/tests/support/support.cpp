#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmt/engine.hpp"

#ifndef DMT_FIXTURE_DIR
#error "DMT_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace dmt::testing {

std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(DMT_FIXTURE_DIR) / name; }

Tensor random_tensor(const Shape& shape, Rng& rng, float lo, float hi) {
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor t(shape);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

namespace {

Tensor gaussian(const Shape& shape, double stddev, Rng& rng) {
  std::normal_distribution<float> n(0.0f, static_cast<float>(stddev));
  Tensor t(shape);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

Conv2d random_conv(std::size_t out, std::size_t in, std::size_t k, std::size_t stride, std::size_t padding, Rng& rng) {
  Conv2d c;
  c.weight = gaussian({out, in, k, k}, 1.0 / std::sqrt(static_cast<double>(in * k * k)), rng);
  c.bias = gaussian({out}, 0.1, rng);
  c.stride = stride;
  c.padding = padding;
  return c;
}

Dense random_dense(std::size_t out, std::size_t in, Rng& rng) {
  Dense d;
  d.weight = gaussian({out, in}, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  d.bias = gaussian({out}, 0.1, rng);
  return d;
}

Model random_model(Rng& rng, const RandomModelOptions& options) {
  const std::size_t channels = pick(rng, 1, 3);
  const std::size_t side = pick(rng, 8, 12);
  Shape shape{channels, side, side};
  std::vector<Layer> layers;
  const std::size_t blocks = pick(rng, 1, 2);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t k = pick(rng, 0, 1) ? 3 : 1;
    const std::size_t stride = pick(rng, 0, 3) == 0 ? 2 : 1;
    const std::size_t padding = k == 3 ? pick(rng, 0, 1) : 0;
    const std::size_t out = pick(rng, 2, 5);
    if ((shape[1] + 2 * padding) < k + stride) break;
    layers.emplace_back(random_conv(out, shape[0], k, stride, padding, rng));
    shape = output_shape(layers.back(), shape, layers.size() - 1);
    layers.emplace_back(ReLU{});
    const auto pool = pick(rng, 0, options.allow_maxpool ? 2 : 1);
    if (pool > 0 && shape[1] >= 4) {
      if (pool == 1) {
        layers.emplace_back(AvgPool{2, 2});
      } else {
        layers.emplace_back(MaxPool{2, 2});
      }
      shape = output_shape(layers.back(), shape, layers.size() - 1);
    }
  }
  layers.emplace_back(Flatten{});
  std::size_t features = shape_size(shape);
  if (pick(rng, 0, 1)) {
    const std::size_t hidden = pick(rng, 4, 12);
    layers.emplace_back(random_dense(hidden, features, rng));
    layers.emplace_back(ReLU{});
    features = hidden;
  }
  layers.emplace_back(random_dense(pick(rng, 2, options.max_classes), features, rng));
  return Model({channels, side, side}, std::move(layers));
}

Model probe_model(LayerKind kind, Rng& rng) {
  const std::size_t c = 2, side = 8;
  std::vector<Layer> layers;
  Shape shape{c, side, side};
  auto push = [&](Layer l) {
    layers.push_back(std::move(l));
    shape = output_shape(layers.back(), shape, layers.size() - 1);
  };
  switch (kind) {
    case LayerKind::Conv2d:
      push(random_conv(3, c, 3, 1, 1, rng));
      push(random_conv(2, 3, 3, 2, 0, rng));
      break;
    case LayerKind::ReLU:
      push(random_conv(3, c, 3, 1, 0, rng));
      push(ReLU{});
      break;
    case LayerKind::AvgPool:
      push(random_conv(3, c, 1, 1, 0, rng));
      push(AvgPool{2, 2});
      break;
    case LayerKind::MaxPool:
      push(random_conv(3, c, 1, 1, 0, rng));
      push(MaxPool{2, 2});
      break;
    case LayerKind::Dense:
    case LayerKind::Flatten:
      break;
  }
  push(Flatten{});
  if (kind == LayerKind::Dense) {
    push(random_dense(6, shape_size(shape), rng));
    push(ReLU{});
  }
  push(random_dense(4, shape_size(shape), rng));
  return Model({c, side, side}, std::move(layers));
}

double kink_distance(const Model& model, const Tensor& input) {
  const Trace trace = forward(model, input);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < model.layers().size(); ++k) {
    const Layer& layer = model.layers()[k];
    const Tensor& in = trace.activations[k];
    if (std::holds_alternative<ReLU>(layer)) {
      for (float v : in.values()) best = std::min(best, std::abs(static_cast<double>(v)));
    } else if (const auto* mp = std::get_if<MaxPool>(&layer)) {
      const std::size_t ch = in.dim(0), h = in.dim(1), w = in.dim(2);
      const std::size_t oh = (h - mp->kernel) / mp->stride + 1, ow = (w - mp->kernel) / mp->stride + 1;
      for (std::size_t c = 0; c < ch; ++c) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
          for (std::size_t ox = 0; ox < ow; ++ox) {
            std::vector<float> window;
            for (std::size_t dy = 0; dy < mp->kernel; ++dy) {
              for (std::size_t dx = 0; dx < mp->kernel; ++dx) {
                window.push_back(in.at(c, oy * mp->stride + dy, ox * mp->stride + dx));
              }
            }
            std::sort(window.begin(), window.end());
            best = std::min(best, static_cast<double>(window.back() - window[window.size() - 2]));
          }
        }
      }
    }
  }
  return best;
}

Tensor numeric_gradient(const Model& model, const Tensor& input, std::size_t cls, float h) {
  Tensor grad(input.shape());
  Tensor probe = input;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const float keep = probe[i];
    const float hi = keep + h, lo = keep - h;  // actual representable step
    probe[i] = hi;
    const double up = logits(model, probe)[cls];
    probe[i] = lo;
    const double down = logits(model, probe)[cls];
    probe[i] = keep;
    grad[i] = static_cast<float>((up - down) / (static_cast<double>(hi) - lo));
  }
  return grad;
}

BinaryMask random_mask(std::size_t h, std::size_t w, double density, Rng& rng) {
  std::bernoulli_distribution on(density);
  BinaryMask m(h, w);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = on(rng) ? 1 : 0;
  return m;
}

}  // namespace dmt::testing
