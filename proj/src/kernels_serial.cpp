#include <algorithm>
#include <vector>

#include "dmt/kernels.hpp"

namespace dmt::kernels::serial {

void conv2d_forward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = bias[oc];
        for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
          for (std::size_t ky = 0; ky < g.kernel; ++ky) {
            for (std::size_t kx = 0; kx < g.kernel; ++kx) {
              const long y = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
              const long x = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
              if (y < 0 || x < 0 || y >= static_cast<long>(g.in_height) || x >= static_cast<long>(g.in_width)) {
                continue;
              }
              acc += static_cast<double>(weight[((oc * g.in_channels + ic) * g.kernel + ky) * g.kernel + kx]) *
                     input[(ic * g.in_height + y) * g.in_width + x];
            }
          }
        }
        output[(oc * oh + oy) * ow + ox] = static_cast<float>(acc);
      }
    }
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const float> grad_output,
                           std::span<const float> weight, std::span<float> grad_input) {
  // Scatter form: each output cell pushes its gradient back onto its window.
  const std::size_t oh = g.out_height(), ow = g.out_width();
  std::vector<double> acc(grad_input.size(), 0.0);
  for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double go = grad_output[(oc * oh + oy) * ow + ox];
        for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
          for (std::size_t ky = 0; ky < g.kernel; ++ky) {
            for (std::size_t kx = 0; kx < g.kernel; ++kx) {
              const long y = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
              const long x = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
              if (y < 0 || x < 0 || y >= static_cast<long>(g.in_height) || x >= static_cast<long>(g.in_width)) {
                continue;
              }
              acc[(ic * g.in_height + y) * g.in_width + x] +=
                  go * weight[((oc * g.in_channels + ic) * g.kernel + ky) * g.kernel + kx];
            }
          }
        }
      }
    }
  }
  std::transform(acc.begin(), acc.end(), grad_input.begin(), [](double v) { return static_cast<float>(v); });
}

void dense_forward(std::size_t in, std::size_t out, std::span<const float> input, std::span<const float> weight,
                   std::span<const float> bias, std::span<float> output) {
  for (std::size_t o = 0; o < out; ++o) {
    double acc = bias[o];
    for (std::size_t i = 0; i < in; ++i) acc += static_cast<double>(weight[o * in + i]) * input[i];
    output[o] = static_cast<float>(acc);
  }
}

void dense_backward_input(std::size_t in, std::size_t out, std::span<const float> grad_output,
                          std::span<const float> weight, std::span<float> grad_input) {
  std::vector<double> acc(in, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t i = 0; i < in; ++i) acc[i] += static_cast<double>(weight[o * in + i]) * grad_output[o];
  }
  std::transform(acc.begin(), acc.end(), grad_input.begin(), [](double v) { return static_cast<float>(v); });
}

void avgpool_forward(const PoolGeometry& g, std::span<const float> input, std::span<float> output) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            acc += input[(c * g.in_height + oy * g.stride + ky) * g.in_width + ox * g.stride + kx];
          }
        }
        output[(c * oh + oy) * ow + ox] = static_cast<float>(acc / static_cast<double>(g.kernel * g.kernel));
      }
    }
  }
}

void avgpool_backward(const PoolGeometry& g, std::span<const float> grad_output, std::span<float> grad_input) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  std::vector<double> acc(grad_input.size(), 0.0);
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double share = grad_output[(c * oh + oy) * ow + ox] / static_cast<double>(g.kernel * g.kernel);
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            acc[(c * g.in_height + oy * g.stride + ky) * g.in_width + ox * g.stride + kx] += share;
          }
        }
      }
    }
  }
  std::transform(acc.begin(), acc.end(), grad_input.begin(), [](double v) { return static_cast<float>(v); });
}

void maxpool_forward(const PoolGeometry& g, std::span<const float> input, std::span<float> output) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        float best = input[(c * g.in_height + oy * g.stride) * g.in_width + ox * g.stride];
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            best = std::max(best, input[(c * g.in_height + oy * g.stride + ky) * g.in_width + ox * g.stride + kx]);
          }
        }
        output[(c * oh + oy) * ow + ox] = best;
      }
    }
  }
}

void maxpool_backward(const PoolGeometry& g, std::span<const float> input, std::span<const float> grad_output,
                      std::span<float> grad_input) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  std::fill(grad_input.begin(), grad_input.end(), 0.0f);
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (c * g.in_height + oy * g.stride) * g.in_width + ox * g.stride;
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            const std::size_t idx = (c * g.in_height + oy * g.stride + ky) * g.in_width + ox * g.stride + kx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        grad_input[best] += grad_output[(c * oh + oy) * ow + ox];
      }
    }
  }
}

void morph(MorphOp op, const MorphGeometry& g, std::uint8_t outside, std::span<const std::uint8_t> input,
           std::span<std::uint8_t> output) {
  const long h = static_cast<long>(g.height), w = static_cast<long>(g.width);
  const long r = static_cast<long>(g.kernel / 2);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      bool all = true, any = false;
      for (long dy = -r; dy <= r; ++dy) {
        for (long dx = -r; dx <= r; ++dx) {
          const long yy = y + dy, xx = x + dx;
          const bool v = (yy < 0 || xx < 0 || yy >= h || xx >= w) ? outside != 0 : input[yy * w + xx] != 0;
          all = all && v;
          any = any || v;
        }
      }
      output[y * w + x] = (op == MorphOp::Erode ? all : any) ? 1 : 0;
    }
  }
}

}  // namespace dmt::kernels::serial
