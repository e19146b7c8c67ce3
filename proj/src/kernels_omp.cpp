#include <algorithm>
#include <cstdint>
#include <vector>

#include "dmt/kernels.hpp"

namespace dmt::kernels {

void conv2d_forward(const ConvGeometry& g, std::span<const float> input, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> output) {
  const long oc_count = static_cast<long>(g.out_channels);
  const long oh = static_cast<long>(g.out_height());
  const long ow = static_cast<long>(g.out_width());
  const long ih = static_cast<long>(g.in_height);
  const long iw = static_cast<long>(g.in_width);
  const long k = static_cast<long>(g.kernel);
  const long stride = static_cast<long>(g.stride);
  const long pad = static_cast<long>(g.padding);
  const long ic_count = static_cast<long>(g.in_channels);

#pragma omp parallel for collapse(2) schedule(static)
  for (long oc = 0; oc < oc_count; ++oc) {
    for (long oy = 0; oy < oh; ++oy) {
      for (long ox = 0; ox < ow; ++ox) {
        double acc = bias[oc];
        for (long ic = 0; ic < ic_count; ++ic) {
          const float* w = weight.data() + ((oc * ic_count + ic) * k) * k;
          const float* in = input.data() + ic * ih * iw;
          for (long ky = 0; ky < k; ++ky) {
            const long y = oy * stride + ky - pad;
            if (y < 0 || y >= ih) continue;
            for (long kx = 0; kx < k; ++kx) {
              const long x = ox * stride + kx - pad;
              if (x < 0 || x >= iw) continue;
              acc += static_cast<double>(w[ky * k + kx]) * in[y * iw + x];
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
  const long oc_count = static_cast<long>(g.out_channels);
  const long oh = static_cast<long>(g.out_height());
  const long ow = static_cast<long>(g.out_width());
  const long ih = static_cast<long>(g.in_height);
  const long iw = static_cast<long>(g.in_width);
  const long k = static_cast<long>(g.kernel);
  const long stride = static_cast<long>(g.stride);
  const long pad = static_cast<long>(g.padding);
  const long ic_count = static_cast<long>(g.in_channels);

  // Gather form: every input cell sums the output cells whose window covers it.
#pragma omp parallel for collapse(2) schedule(static)
  for (long ic = 0; ic < ic_count; ++ic) {
    for (long iy = 0; iy < ih; ++iy) {
      for (long ix = 0; ix < iw; ++ix) {
        double acc = 0.0;
        for (long oc = 0; oc < oc_count; ++oc) {
          const float* w = weight.data() + ((oc * ic_count + ic) * k) * k;
          const float* go = grad_output.data() + oc * oh * ow;
          for (long ky = 0; ky < k; ++ky) {
            const long ny = iy + pad - ky;
            if (ny < 0 || ny % stride != 0) continue;
            const long oy = ny / stride;
            if (oy >= oh) continue;
            for (long kx = 0; kx < k; ++kx) {
              const long nx = ix + pad - kx;
              if (nx < 0 || nx % stride != 0) continue;
              const long ox = nx / stride;
              if (ox >= ow) continue;
              acc += static_cast<double>(w[ky * k + kx]) * go[oy * ow + ox];
            }
          }
        }
        grad_input[(ic * ih + iy) * iw + ix] = static_cast<float>(acc);
      }
    }
  }
}

void dense_forward(std::size_t in, std::size_t out, std::span<const float> input, std::span<const float> weight,
                   std::span<const float> bias, std::span<float> output) {
  const long n_out = static_cast<long>(out);
#pragma omp parallel for schedule(static)
  for (long o = 0; o < n_out; ++o) {
    const float* w = weight.data() + o * in;
    double acc = bias[o];
    for (std::size_t i = 0; i < in; ++i) acc += static_cast<double>(w[i]) * input[i];
    output[o] = static_cast<float>(acc);
  }
}

void dense_backward_input(std::size_t in, std::size_t out, std::span<const float> grad_output,
                          std::span<const float> weight, std::span<float> grad_input) {
  const long n_in = static_cast<long>(in);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n_in; ++i) {
    double acc = 0.0;
    for (std::size_t o = 0; o < out; ++o) acc += static_cast<double>(weight[o * in + i]) * grad_output[o];
    grad_input[i] = static_cast<float>(acc);
  }
}

void avgpool_forward(const PoolGeometry& g, std::span<const float> input, std::span<float> output) {
  const long channels = static_cast<long>(g.channels);
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const double norm = 1.0 / static_cast<double>(g.kernel * g.kernel);
#pragma omp parallel for schedule(static)
  for (long c = 0; c < channels; ++c) {
    const float* in = input.data() + c * g.in_height * g.in_width;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
          for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            acc += in[(oy * g.stride + ky) * g.in_width + ox * g.stride + kx];
          }
        }
        output[(c * oh + oy) * ow + ox] = static_cast<float>(acc * norm);
      }
    }
  }
}

void avgpool_backward(const PoolGeometry& g, std::span<const float> grad_output, std::span<float> grad_input) {
  const long channels = static_cast<long>(g.channels);
  const long oh = static_cast<long>(g.out_height()), ow = static_cast<long>(g.out_width());
  const long k = static_cast<long>(g.kernel), stride = static_cast<long>(g.stride);
  const long ih = static_cast<long>(g.in_height), iw = static_cast<long>(g.in_width);
  const double norm = 1.0 / static_cast<double>(k * k);
#pragma omp parallel for collapse(2) schedule(static)
  for (long c = 0; c < channels; ++c) {
    for (long y = 0; y < ih; ++y) {
      const float* go = grad_output.data() + c * oh * ow;
      for (long x = 0; x < iw; ++x) {
        double acc = 0.0;
        // Windows oy with oy*stride <= y < oy*stride + k.
        const long oy_lo = y >= k ? (y - k) / stride + 1 : 0;
        const long oy_hi = std::min(oh - 1, y / stride);
        const long ox_lo = x >= k ? (x - k) / stride + 1 : 0;
        const long ox_hi = std::min(ow - 1, x / stride);
        for (long oy = oy_lo; oy <= oy_hi; ++oy) {
          for (long ox = ox_lo; ox <= ox_hi; ++ox) acc += go[oy * ow + ox];
        }
        grad_input[(c * ih + y) * iw + x] = static_cast<float>(acc * norm);
      }
    }
  }
}

namespace {

std::size_t window_argmax(const PoolGeometry& g, const float* in, std::size_t oy, std::size_t ox) {
  std::size_t best = oy * g.stride * g.in_width + ox * g.stride;
  for (std::size_t ky = 0; ky < g.kernel; ++ky) {
    for (std::size_t kx = 0; kx < g.kernel; ++kx) {
      const std::size_t idx = (oy * g.stride + ky) * g.in_width + ox * g.stride + kx;
      if (in[idx] > in[best]) best = idx;
    }
  }
  return best;
}

}  // namespace

void maxpool_forward(const PoolGeometry& g, std::span<const float> input, std::span<float> output) {
  const long channels = static_cast<long>(g.channels);
  const std::size_t oh = g.out_height(), ow = g.out_width();
#pragma omp parallel for schedule(static)
  for (long c = 0; c < channels; ++c) {
    const float* in = input.data() + c * g.in_height * g.in_width;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) output[(c * oh + oy) * ow + ox] = in[window_argmax(g, in, oy, ox)];
    }
  }
}

void maxpool_backward(const PoolGeometry& g, std::span<const float> input, std::span<const float> grad_output,
                      std::span<float> grad_input) {
  const long channels = static_cast<long>(g.channels);
  const std::size_t oh = g.out_height(), ow = g.out_width();
  const std::size_t plane = g.in_height * g.in_width;
#pragma omp parallel for schedule(static)
  for (long c = 0; c < channels; ++c) {
    const float* in = input.data() + c * plane;
    float* gi = grad_input.data() + c * plane;
    std::fill(gi, gi + plane, 0.0f);
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) gi[window_argmax(g, in, oy, ox)] += grad_output[(c * oh + oy) * ow + ox];
    }
  }
}

void morph(MorphOp op, const MorphGeometry& g, std::uint8_t outside, std::span<const std::uint8_t> input,
           std::span<std::uint8_t> output) {
  // A square window is separable: a 1-D pass along rows, then along columns.
  // Erosion keeps a pixel only if no covered pixel is 0; dilation sets it if
  // any covered pixel is 1.
  const long h = static_cast<long>(g.height), w = static_cast<long>(g.width);
  const long r = static_cast<long>(g.kernel / 2);
  const std::uint8_t stop = op == MorphOp::Erode ? 0 : 1;
  std::vector<std::uint8_t> rows(input.size());

#pragma omp parallel for schedule(static)
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      std::uint8_t v = 1 - stop;
      for (long dx = -r; dx <= r && v != stop; ++dx) {
        const long xx = x + dx;
        const std::uint8_t s = (xx < 0 || xx >= w) ? outside : (input[y * w + xx] ? 1 : 0);
        if (s == stop) v = stop;
      }
      rows[y * w + x] = v;
    }
  }

#pragma omp parallel for schedule(static)
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      std::uint8_t v = 1 - stop;
      for (long dy = -r; dy <= r && v != stop; ++dy) {
        const long yy = y + dy;
        const std::uint8_t s = (yy < 0 || yy >= h) ? outside : rows[yy * w + x];
        if (s == stop) v = stop;
      }
      output[y * w + x] = v;
    }
  }
}

}  // namespace dmt::kernels
