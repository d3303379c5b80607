#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>

namespace mplab {

/// SplitMix64 output function applied to `x + 0x9E3779B97F4A7C15`.
///
/// This is the only mixing primitive in the library. Seed derivation and the
/// sampling streams are both defined in terms of it, so an implementation in
/// another language reproduces every stream given the same formulas.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Tags separating the independent streams drawn for a single trial.
enum class StreamTag : std::uint64_t {
  kMeasurements = 1,  // rows of X
  kNoise = 2,         // xi
  kSigns = 3,         // eps
  kHoldoutMeasurements = 4,
  kHoldoutNoise = 5,
  kGaussian = 6,      // G draws for widths
  kDirections = 7,    // small-ball directions
  kSupport = 8,       // sparse supports and signs for v0
  kProbes = 9,        // kernel-section probes
  kProperty = 10,     // property checks
  kOrderStats = 11,
};

/// Identifies one trial: (master seed, grid cell, trial index).
///
/// Key derivation:
///   h0  = splitmix64(master)
///   h1  = splitmix64(h0 ^ cell)
///   h2  = splitmix64(h1 ^ trial)
///   key = splitmix64(h2 ^ tag)
/// and substream `i` of a key is splitmix64(splitmix64(key) ^ i).
struct SeedPath {
  std::uint64_t master = 0;
  std::uint64_t cell = 0;
  std::uint64_t trial = 0;

  constexpr std::uint64_t key(StreamTag tag) const noexcept {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ cell);
    h = splitmix64(h ^ trial);
    return splitmix64(h ^ static_cast<std::uint64_t>(tag));
  }

  friend constexpr bool operator==(const SeedPath&, const SeedPath&) = default;
};

constexpr std::uint64_t substream_key(std::uint64_t key, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(key) ^ index);
}

/// A SplitMix64 stream: state advances by the golden-ratio increment and each
/// output is the mixed state. Variates are built from its 64-bit outputs:
///   uniform in [0,1)   = (u >> 11) * 2^-53
///   uniform in (0,1]   = ((u >> 11) + 1) * 2^-53
///   sign               = top bit of u (1 -> -1)
///   normal             = Box-Muller on two (0,1] uniforms, second value cached
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t key) noexcept : state_(key) {}
  Rng(std::uint64_t key, std::uint64_t index) noexcept : state_(substream_key(key, index)) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform_open0() noexcept { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }
  double sign() noexcept { return (next() >> 63) ? -1.0 : 1.0; }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform_open0()));
    const double angle = 2.0 * 3.14159265358979323846 * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 via the U^(1/shape) boost.
  double gamma(double shape) noexcept {
    if (shape < 1.0) {
      const double u = uniform_open0();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0;
      double v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open0();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  /// Fisher-Yates, from the back.
  template <class T>
  void shuffle(std::span<T> values) noexcept {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mplab
