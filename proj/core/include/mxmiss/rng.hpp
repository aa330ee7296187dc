#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>

namespace mxmiss {

// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Splittable counter-based generator. Output i of a stream with key k is
// mix64(k + i*gamma), so a stream is a pure function of its key and every
// trial keyed by (master_seed, grid_index, replicate) produces the same
// numbers no matter which thread runs it.
class Rng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit Rng(std::uint64_t key) : state_(key) {}

  // Derives a stream key from up to four integers by chained mixing.
  static Rng from_keys(std::uint64_t master, std::uint64_t a = 0,
                       std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = mix64(master + kGamma);
    s = mix64(s ^ (a + kGamma));
    s = mix64(s ^ (b + kGamma));
    s = mix64(s ^ (c + kGamma));
    return Rng(s);
  }

  // Independent substream; does not advance this generator.
  [[nodiscard]] Rng split(std::uint64_t key) const {
    return Rng(mix64(state_ ^ mix64(key + kGamma)));
  }

  std::uint64_t state() const { return state_; }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix64(state_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  int uniform_int(int n) {  // uniform on {0, ..., n-1}
    return static_cast<int>(uniform() * n) % n;
  }

  // Standard normal via Box-Muller (cosine branch); two uniforms per draw
  // keeps the stream position independent of the realized values.
  double gaussian() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Index draw proportional to nonnegative weights (need not sum to 1).
  int discrete(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("discrete: no positive weight");
    double u = uniform() * total;
    int last_positive = -1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = static_cast<int>(i);
      u -= weights[i];
      if (u < 0.0) return last_positive;
    }
    return last_positive;  // rounding spill lands on the last positive weight
  }

 private:
  std::uint64_t state_;
};

}  // namespace mxmiss
