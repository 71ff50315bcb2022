#include "latshift/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace latshift {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;  // SplitMix64 increment

// SplitMix64 finalizer (Stafford mix13).
std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) {
  // Derive the stream key by mixing seed and stream through two rounds so
  // nearby (seed, stream) pairs land far apart.
  key_ = mix(mix(seed + kGolden) ^ mix(stream + 0x5851F42D4C957F2DULL));
}

std::uint64_t CounterRng::next_bits() {
  ++counter_;
  return mix(key_ + counter_ * kGolden);
}

double CounterRng::uniform() {
  return static_cast<double>(next_bits() >> 11) * 0x1.0p-53;
}

double CounterRng::normal() {
  // Box-Muller, cosine branch only; u1 shifted into (0, 1] so log stays finite.
  const double u1 = (static_cast<double>(next_bits() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_bits() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

double CounterRng::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("CounterRng::gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost to shape+1 and scale back by a uniform power.
    const double u = (static_cast<double>(next_bits() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = normal();
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double CounterRng::beta(double a, double b) {
  const double ga = gamma(a);
  const double gb = gamma(b);
  return ga / (ga + gb);
}

int CounterRng::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("CounterRng::bernoulli: p must lie in [0, 1]");
  return uniform() < p ? 1 : 0;
}

int CounterRng::categorical(const double* probs, int k) {
  const double u = uniform();
  double cum = 0.0;
  for (int i = 0; i < k; ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return k - 1;  // guard against cumulative rounding short of 1
}

}  // namespace latshift
