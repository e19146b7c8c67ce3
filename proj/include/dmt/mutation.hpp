#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dmt/affine.hpp"
#include "dmt/grid.hpp"
#include "dmt/model.hpp"
#include "dmt/tensor.hpp"

namespace dmt {

// Semantics-preserving input transformations. Every spec is plain data and
// serialises to one text line, so a campaign can be replayed exactly.

struct Brightness { double delta = 0.0; };       // x + delta
struct Contrast { double alpha = 1.0; };         // alpha * x
struct Blur { std::size_t kernel = 3; };         // k x k box mean over in-image pixels
struct Affine { AffineMatrix matrix; };          // forward map, bilinear resampling

enum class WeatherKind { Rain, Snow, Fog, Cloud };
struct Weather {
  WeatherKind kind = WeatherKind::Fog;
  double intensity = 0.5;
  std::uint64_t seed = 0;
};

/// Per-channel RGB moments to match.
struct ChannelStats {
  std::array<double, 3> mean{};
  std::array<double, 3> stddev{};
};
struct ColorTransfer { ChannelStats reference; };

struct Fgsm { double epsilon = 0.1; };
struct Bim {
  double epsilon = 0.1;
  std::size_t steps = 10;
  double step_size = 0.02;
};
struct Pgd {
  double epsilon = 0.1;
  std::size_t steps = 10;
  double step_size = 0.02;
  std::uint64_t seed = 0;
  bool random_start = true;
};

using MutationSpec = std::variant<Brightness, Contrast, Blur, Affine, Weather, ColorTransfer, Fgsm, Bim, Pgd>;

/// Family name used in reports and configs ("brightness", "affine", "pgd", ...).
std::string_view family_name(const MutationSpec& spec) noexcept;
bool is_adversarial(const MutationSpec& spec) noexcept;

/// One line, e.g. "brightness 0.1", "affine 1 0 2 0 1 -3", "pgd 0.2 10 0.05 7 random".
/// Numbers use shortest round-trip formatting.
std::string format_spec(const MutationSpec& spec);
/// Inverse of format_spec; throws ConfigError on malformed lines.
MutationSpec parse_spec(std::string_view line);

std::string_view weather_name(WeatherKind kind) noexcept;

/// Declared semantics-preserving parameter ranges; overridable by config.
struct MutationRanges {
  double max_brightness = 0.2;
  double min_contrast = 0.8;
  double max_contrast = 1.25;
  std::vector<std::size_t> blur_kernels{3, 5};
  double max_rotation_deg = 30.0;
  double min_scale = 0.8;
  double max_scale = 1.2;
  double max_translation = 0.1;  // fraction of side length
  double max_shear = 0.2;
  double max_epsilon = 0.3;
  double min_epsilon = 0.05;     // lower end used when sampling
};

/// Throws ConfigError when a spec falls outside `ranges` (or is malformed,
/// e.g. a singular affine or step_size > epsilon).
void check_ranges(const MutationSpec& spec, const MutationRanges& ranges, std::size_t height, std::size_t width);

/// Everything needed to map the mutant's decision back onto the seed's frame.
struct MutationRecord {
  MutationSpec spec;
  std::optional<AffineMatrix> inverse;  // set for affine mutations
  BinaryMask validity;                  // seed-frame pixels that survive the affine; empty otherwise
};

struct MutationResult {
  Tensor image;
  MutationRecord record;
};

/// Applies `spec` to `image` (pixels in [0, 1]). Adversarial specs need
/// `model`; they attack the model's prediction on `image`. Output is clamped
/// to [0, 1] and keeps the input shape.
MutationResult mutate(const Tensor& image, const MutationSpec& spec, const Model* model = nullptr);

Tensor apply_brightness(const Tensor& image, double delta);
Tensor apply_contrast(const Tensor& image, double alpha);
Tensor apply_blur(const Tensor& image, std::size_t kernel);
/// RGB only; deterministic for a given seed. No pixel moves by more than
/// kWeatherMaxChange * intensity.
Tensor apply_weather(const Tensor& image, const Weather& weather);
inline constexpr double kWeatherMaxChange = 0.6;
/// RGB only; Reinhard-style per-channel mean/std matching, then clamp.
Tensor apply_color_transfer(const Tensor& image, const ChannelStats& reference);
ChannelStats channel_stats(const Tensor& rgb);

/// Families a sampler can draw from.
enum class Family { Brightness, Contrast, Blur, Affine, Weather, ColorTransfer, Fgsm, Bim, Pgd };
Family parse_family(std::string_view name);
std::string_view family_name(Family family) noexcept;
bool family_needs_rgb(Family family) noexcept;

/// Draws a random spec of `family` within `ranges` for an H x W image.
MutationSpec sample_spec(Family family, std::mt19937_64& rng, const MutationRanges& ranges, std::size_t height,
                         std::size_t width);

}  // namespace dmt
