#include "dmt/mutation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "dmt/adversarial.hpp"
#include "dmt/engine.hpp"
#include "dmt/error.hpp"

namespace dmt {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string num(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::vector<std::string_view> words_of(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
    if (pos > start) words.push_back(line.substr(start, pos - start));
  }
  return words;
}

double to_double(std::string_view w) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
  if (ec != std::errc() || ptr != w.data() + w.size() || !std::isfinite(v)) {
    throw ConfigError("bad number '" + std::string(w) + "' in mutation spec");
  }
  return v;
}

std::uint64_t to_u64(std::string_view w) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
  if (ec != std::errc() || ptr != w.data() + w.size()) {
    throw ConfigError("bad integer '" + std::string(w) + "' in mutation spec");
  }
  return v;
}

void expect_arity(const std::vector<std::string_view>& w, std::size_t n) {
  if (w.size() != n + 1) {
    throw ConfigError("mutation '" + std::string(w[0]) + "' takes " + std::to_string(n) + " arguments");
  }
}

WeatherKind parse_weather(std::string_view name) {
  if (name == "rain") return WeatherKind::Rain;
  if (name == "snow") return WeatherKind::Snow;
  if (name == "fog") return WeatherKind::Fog;
  if (name == "cloud") return WeatherKind::Cloud;
  throw ConfigError("unknown weather '" + std::string(name) + "'");
}

void require_rgb(const Tensor& image, std::string_view what) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ConfigError(std::string(what) + " needs an RGB image, got " + shape_to_string(image.shape()));
  }
}

void clamp01(Tensor& t) {
  for (auto& v : t.values()) v = std::clamp(v, 0.0f, 1.0f);
}

// Smooth noise in [0, 1]: a seeded coarse lattice upsampled bilinearly.
std::vector<double> value_noise(std::size_t h, std::size_t w, std::size_t cell, std::mt19937_64& rng) {
  const std::size_t gh = h / cell + 2, gw = w / cell + 2;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> lattice(gh * gw);
  for (auto& v : lattice) v = u(rng);
  std::vector<double> out(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double gy = static_cast<double>(y) / cell, gx = static_cast<double>(x) / cell;
      const std::size_t y0 = static_cast<std::size_t>(gy), x0 = static_cast<std::size_t>(gx);
      const double ty = gy - y0, tx = gx - x0;
      const double top = lattice[y0 * gw + x0] * (1 - tx) + lattice[y0 * gw + x0 + 1] * tx;
      const double bottom = lattice[(y0 + 1) * gw + x0] * (1 - tx) + lattice[(y0 + 1) * gw + x0 + 1] * tx;
      out[y * w + x] = top * (1 - ty) + bottom * ty;
    }
  }
  return out;
}

// Decomposes the 2x2 part as R(theta) * [[sx, sh], [0, sy]] (screen rotation).
struct AffineParts {
  double degrees, sx, sy, shear;
};

AffineParts decompose(const AffineMatrix& a) {
  const double sx = std::hypot(a.m[0], a.m[3]);
  const double c = a.m[0] / sx, s = -a.m[3] / sx;
  const double sh = c * a.m[1] - s * a.m[4];
  const double sy = s * a.m[1] + c * a.m[4];
  return {std::atan2(s, c) * 180.0 / std::numbers::pi, sx, sy, sh / sy};
}

}  // namespace

std::string_view weather_name(WeatherKind kind) noexcept {
  switch (kind) {
    case WeatherKind::Rain: return "rain";
    case WeatherKind::Snow: return "snow";
    case WeatherKind::Fog: return "fog";
    case WeatherKind::Cloud: return "cloud";
  }
  return "fog";
}

std::string_view family_name(const MutationSpec& spec) noexcept {
  return family_name(static_cast<Family>(spec.index()));
}

std::string_view family_name(Family family) noexcept {
  switch (family) {
    case Family::Brightness: return "brightness";
    case Family::Contrast: return "contrast";
    case Family::Blur: return "blur";
    case Family::Affine: return "affine";
    case Family::Weather: return "weather";
    case Family::ColorTransfer: return "colortransfer";
    case Family::Fgsm: return "fgsm";
    case Family::Bim: return "bim";
    case Family::Pgd: return "pgd";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (int f = 0; f <= static_cast<int>(Family::Pgd); ++f) {
    if (family_name(static_cast<Family>(f)) == name) return static_cast<Family>(f);
  }
  throw ConfigError("unknown mutation family '" + std::string(name) + "'");
}

bool family_needs_rgb(Family family) noexcept {
  return family == Family::Weather || family == Family::ColorTransfer;
}

bool is_adversarial(const MutationSpec& spec) noexcept {
  return std::holds_alternative<Fgsm>(spec) || std::holds_alternative<Bim>(spec) || std::holds_alternative<Pgd>(spec);
}

std::string format_spec(const MutationSpec& spec) {
  return std::visit(
      Overloaded{
          [](const Brightness& b) { return "brightness " + num(b.delta); },
          [](const Contrast& c) { return "contrast " + num(c.alpha); },
          [](const Blur& b) { return "blur " + std::to_string(b.kernel); },
          [](const Affine& a) {
            std::string out = "affine";
            for (double v : a.matrix.m) out += " " + num(v);
            return out;
          },
          [](const Weather& w) {
            return "weather " + std::string(weather_name(w.kind)) + " " + num(w.intensity) + " " +
                   std::to_string(w.seed);
          },
          [](const ColorTransfer& c) {
            std::string out = "colortransfer";
            for (double v : c.reference.mean) out += " " + num(v);
            for (double v : c.reference.stddev) out += " " + num(v);
            return out;
          },
          [](const Fgsm& f) { return "fgsm " + num(f.epsilon); },
          [](const Bim& b) {
            return "bim " + num(b.epsilon) + " " + std::to_string(b.steps) + " " + num(b.step_size);
          },
          [](const Pgd& p) {
            return "pgd " + num(p.epsilon) + " " + std::to_string(p.steps) + " " + num(p.step_size) + " " +
                   std::to_string(p.seed) + (p.random_start ? " random" : " zero");
          },
      },
      spec);
}

MutationSpec parse_spec(std::string_view line) {
  const auto w = words_of(line);
  if (w.empty()) throw ConfigError("empty mutation spec");
  const Family family = parse_family(w[0]);
  switch (family) {
    case Family::Brightness: expect_arity(w, 1); return Brightness{to_double(w[1])};
    case Family::Contrast: expect_arity(w, 1); return Contrast{to_double(w[1])};
    case Family::Blur: expect_arity(w, 1); return Blur{static_cast<std::size_t>(to_u64(w[1]))};
    case Family::Affine: {
      expect_arity(w, 6);
      Affine a;
      for (std::size_t i = 0; i < 6; ++i) a.matrix.m[i] = to_double(w[i + 1]);
      return a;
    }
    case Family::Weather:
      expect_arity(w, 3);
      return Weather{parse_weather(w[1]), to_double(w[2]), to_u64(w[3])};
    case Family::ColorTransfer: {
      expect_arity(w, 6);
      ColorTransfer c;
      for (std::size_t i = 0; i < 3; ++i) {
        c.reference.mean[i] = to_double(w[i + 1]);
        c.reference.stddev[i] = to_double(w[i + 4]);
      }
      return c;
    }
    case Family::Fgsm: expect_arity(w, 1); return Fgsm{to_double(w[1])};
    case Family::Bim:
      expect_arity(w, 3);
      return Bim{to_double(w[1]), static_cast<std::size_t>(to_u64(w[2])), to_double(w[3])};
    case Family::Pgd: {
      expect_arity(w, 5);
      if (w[5] != "random" && w[5] != "zero") throw ConfigError("pgd start must be 'random' or 'zero'");
      return Pgd{to_double(w[1]), static_cast<std::size_t>(to_u64(w[2])), to_double(w[3]), to_u64(w[4]),
                 w[5] == "random"};
    }
  }
  throw ConfigError("unhandled mutation family");
}

void check_ranges(const MutationSpec& spec, const MutationRanges& r, std::size_t height, std::size_t width) {
  constexpr double slack = 1e-9;
  auto fail = [&](const std::string& why) { throw ConfigError("'" + format_spec(spec) + "': " + why); };
  std::visit(Overloaded{
                 [&](const Brightness& b) {
                   if (std::abs(b.delta) > r.max_brightness + slack) fail("brightness change out of range");
                 },
                 [&](const Contrast& c) {
                   if (c.alpha < r.min_contrast - slack || c.alpha > r.max_contrast + slack) {
                     fail("contrast factor out of range");
                   }
                 },
                 [&](const Blur& b) {
                   if (std::find(r.blur_kernels.begin(), r.blur_kernels.end(), b.kernel) == r.blur_kernels.end()) {
                     fail("blur kernel not allowed");
                   }
                 },
                 [&](const Affine& a) {
                   if (!a.matrix.invertible()) fail("affine matrix is not invertible");
                   const auto parts = decompose(a.matrix);
                   if (std::abs(parts.degrees) > r.max_rotation_deg + slack) fail("rotation out of range");
                   for (double s : {parts.sx, parts.sy}) {
                     if (s < r.min_scale - slack || s > r.max_scale + slack) fail("scale out of range");
                   }
                   if (std::abs(parts.shear) > r.max_shear + slack) fail("shear out of range");
                   const double cx = (static_cast<double>(width) - 1) / 2, cy = (static_cast<double>(height) - 1) / 2;
                   const auto [tx, ty] = a.matrix.apply(cx, cy);
                   if (std::abs(tx - cx) > r.max_translation * width + slack ||
                       std::abs(ty - cy) > r.max_translation * height + slack) {
                     fail("translation out of range");
                   }
                 },
                 [&](const Weather& w) {
                   if (w.intensity < 0.0 || w.intensity > 1.0) fail("weather intensity out of [0, 1]");
                 },
                 [&](const ColorTransfer& c) {
                   for (std::size_t i = 0; i < 3; ++i) {
                     if (c.reference.mean[i] < 0.0 || c.reference.mean[i] > 1.0 || c.reference.stddev[i] < 0.0) {
                       fail("colour statistics out of range");
                     }
                   }
                 },
                 [&](const Fgsm& f) {
                   if (f.epsilon <= 0.0 || f.epsilon > r.max_epsilon + slack) fail("epsilon out of range");
                 },
                 [&](const Bim& b) {
                   if (b.epsilon <= 0.0 || b.epsilon > r.max_epsilon + slack) fail("epsilon out of range");
                   if (b.steps == 0 || b.step_size <= 0.0 || b.step_size > b.epsilon) fail("bad step schedule");
                 },
                 [&](const Pgd& p) {
                   if (p.epsilon <= 0.0 || p.epsilon > r.max_epsilon + slack) fail("epsilon out of range");
                   if (p.steps == 0 || p.step_size <= 0.0 || p.step_size > p.epsilon) fail("bad step schedule");
                 },
             },
             spec);
}

Tensor apply_brightness(const Tensor& image, double delta) {
  Tensor out = image;
  for (auto& v : out.values()) v = static_cast<float>(v + delta);
  clamp01(out);
  return out;
}

Tensor apply_contrast(const Tensor& image, double alpha) {
  Tensor out = image;
  for (auto& v : out.values()) v = static_cast<float>(v * alpha);
  clamp01(out);
  return out;
}

Tensor apply_blur(const Tensor& image, std::size_t kernel) {
  if (kernel == 0 || kernel % 2 == 0) throw ConfigError("blur kernel must be odd");
  if (image.rank() != 3) throw ShapeError("blur expects a (C, H, W) image");
  const long r = static_cast<long>(kernel / 2);
  const long h = static_cast<long>(image.dim(1)), w = static_cast<long>(image.dim(2));
  Tensor out(image.shape());
  for (std::size_t c = 0; c < image.dim(0); ++c) {
    for (long y = 0; y < h; ++y) {
      for (long x = 0; x < w; ++x) {
        double acc = 0.0;
        int n = 0;
        for (long yy = std::max(0L, y - r); yy <= std::min(h - 1, y + r); ++yy) {
          for (long xx = std::max(0L, x - r); xx <= std::min(w - 1, x + r); ++xx) {
            acc += image.at(c, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
            ++n;
          }
        }
        out.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = static_cast<float>(acc / n);
      }
    }
  }
  clamp01(out);
  return out;
}

Tensor apply_weather(const Tensor& image, const Weather& weather) {
  require_rgb(image, "weather filter");
  if (weather.intensity < 0.0 || weather.intensity > 1.0) throw ConfigError("weather intensity must lie in [0, 1]");
  const std::size_t h = image.dim(1), w = image.dim(2);
  const double cap = kWeatherMaxChange * weather.intensity;
  std::mt19937_64 rng(weather.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // Each pixel is pulled toward `target` by `alpha` in [0, cap].
  std::vector<double> alpha(h * w, 0.0);
  std::vector<double> target(h * w, 1.0);
  switch (weather.kind) {
    case WeatherKind::Fog: {
      const auto noise = value_noise(h, w, std::max<std::size_t>(2, w / 3), rng);
      for (std::size_t i = 0; i < h * w; ++i) alpha[i] = cap * (0.5 + 0.5 * noise[i]);
      break;
    }
    case WeatherKind::Cloud: {
      const auto noise = value_noise(h, w, std::max<std::size_t>(2, w / 4), rng);
      for (std::size_t i = 0; i < h * w; ++i) {
        alpha[i] = cap * noise[i] * noise[i];
        target[i] = 0.85;
      }
      break;
    }
    case WeatherKind::Rain: {
      const std::size_t streaks = static_cast<std::size_t>(weather.intensity * h * w / 20.0);
      const std::size_t length = std::max<std::size_t>(3, h / 8);
      for (std::size_t s = 0; s < streaks; ++s) {
        long x = static_cast<long>(u(rng) * w), y = static_cast<long>(u(rng) * h);
        for (std::size_t k = 0; k < length; ++k, ++y) {
          if (k % 3 == 2) ++x;  // slight slant
          if (x < 0 || y < 0 || x >= static_cast<long>(w) || y >= static_cast<long>(h)) break;
          alpha[y * w + x] = cap;
          target[y * w + x] = 0.8;
        }
      }
      break;
    }
    case WeatherKind::Snow: {
      const std::size_t flakes = static_cast<std::size_t>(weather.intensity * h * w / 15.0);
      for (std::size_t s = 0; s < flakes; ++s) {
        const std::size_t x = std::min(w - 1, static_cast<std::size_t>(u(rng) * w));
        const std::size_t y = std::min(h - 1, static_cast<std::size_t>(u(rng) * h));
        alpha[y * w + x] = cap;
      }
      break;
    }
  }

  Tensor out = image;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < h * w; ++i) {
      float& v = out[c * h * w + i];
      v = static_cast<float>(v + alpha[i] * (target[i] - v));
    }
  }
  clamp01(out);
  return out;
}

ChannelStats channel_stats(const Tensor& rgb) {
  require_rgb(rgb, "colour statistics");
  const std::size_t plane = rgb.dim(1) * rgb.dim(2);
  ChannelStats stats;
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < plane; ++i) mean += rgb[c * plane + i];
    mean /= plane;
    double var = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = rgb[c * plane + i] - mean;
      var += d * d;
    }
    stats.mean[c] = mean;
    stats.stddev[c] = std::sqrt(var / plane);
  }
  return stats;
}

Tensor apply_color_transfer(const Tensor& image, const ChannelStats& reference) {
  const ChannelStats own = channel_stats(image);
  const std::size_t plane = image.dim(1) * image.dim(2);
  Tensor out = image;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      float& v = out[c * plane + i];
      if (own.stddev[c] < 1e-12) {
        v = static_cast<float>(reference.mean[c]);
      } else {
        v = static_cast<float>((v - own.mean[c]) / own.stddev[c] * reference.stddev[c] + reference.mean[c]);
      }
    }
  }
  clamp01(out);
  return out;
}

MutationResult mutate(const Tensor& image, const MutationSpec& spec, const Model* model) {
  if (image.rank() != 3) throw ShapeError("mutation expects a (C, H, W) image");
  MutationResult result{Tensor{}, MutationRecord{spec, std::nullopt, BinaryMask{}}};
  auto attacked_class = [&]() {
    if (model == nullptr) throw ConfigError("adversarial mutation '" + format_spec(spec) + "' needs a model");
    return predict(*model, image).label;
  };
  result.image = std::visit(
      Overloaded{
          [&](const Brightness& b) { return apply_brightness(image, b.delta); },
          [&](const Contrast& c) { return apply_contrast(image, c.alpha); },
          [&](const Blur& b) { return apply_blur(image, b.kernel); },
          [&](const Affine& a) {
            result.record.inverse = a.matrix.inverse();
            result.record.validity = valid_region(image.dim(1), image.dim(2), a.matrix);
            Tensor out = warp_image(image, a.matrix);
            clamp01(out);
            return out;
          },
          [&](const Weather& w) { return apply_weather(image, w); },
          [&](const ColorTransfer& c) { return apply_color_transfer(image, c.reference); },
          [&](const Fgsm& f) { return fgsm(*model, image, attacked_class(), f.epsilon); },
          [&](const Bim& b) { return bim(*model, image, attacked_class(), b.epsilon, b.steps, b.step_size); },
          [&](const Pgd& p) {
            return pgd(*model, image, attacked_class(), p.epsilon, p.steps, p.step_size, p.seed, p.random_start);
          },
      },
      spec);
  return result;
}

MutationSpec sample_spec(Family family, std::mt19937_64& rng, const MutationRanges& r, std::size_t height,
                         std::size_t width) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double cx = (static_cast<double>(width) - 1) / 2, cy = (static_cast<double>(height) - 1) / 2;
  const double eps = between(r.min_epsilon, r.max_epsilon);
  switch (family) {
    case Family::Brightness: return Brightness{between(-r.max_brightness, r.max_brightness)};
    case Family::Contrast: return Contrast{between(r.min_contrast, r.max_contrast)};
    case Family::Blur: {
      if (r.blur_kernels.empty()) throw ConfigError("no blur kernels configured");
      return Blur{r.blur_kernels[std::min(r.blur_kernels.size() - 1,
                                          static_cast<std::size_t>(unit(rng) * r.blur_kernels.size()))]};
    }
    case Family::Affine: {
      switch (static_cast<int>(unit(rng) * 4)) {
        case 0: return Affine{AffineMatrix::rotation(between(-r.max_rotation_deg, r.max_rotation_deg), cx, cy)};
        case 1: {
          const double s = between(r.min_scale, r.max_scale);
          return Affine{AffineMatrix::scaling(s, s, cx, cy)};
        }
        case 2:
          return Affine{AffineMatrix::translation(std::trunc(between(-r.max_translation, r.max_translation) * width),
                                                  std::trunc(between(-r.max_translation, r.max_translation) * height))};
        default: return Affine{AffineMatrix::shear(between(-r.max_shear, r.max_shear), cy)};
      }
    }
    case Family::Weather: {
      const auto kind = static_cast<WeatherKind>(std::min(3, static_cast<int>(unit(rng) * 4)));
      return Weather{kind, between(0.2, 0.8), rng()};
    }
    case Family::ColorTransfer: {
      ColorTransfer c;
      for (std::size_t i = 0; i < 3; ++i) {
        c.reference.mean[i] = between(0.3, 0.7);
        c.reference.stddev[i] = between(0.1, 0.3);
      }
      return c;
    }
    case Family::Fgsm: return Fgsm{eps};
    case Family::Bim: return Bim{eps, 10, eps / 4};
    case Family::Pgd: return Pgd{eps, 10, eps / 4, rng(), true};
  }
  throw ConfigError("unhandled mutation family");
}

}  // namespace dmt
