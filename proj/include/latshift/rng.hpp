#pragma once

#include <cstdint>

namespace latshift {

// ===== Counter-based random number generation =====
//
// SplitMix64 used as a counter-based generator: the i-th output of a stream
// is a pure function of (seed, stream, i). Distinct streams are assigned to
// distinct generated variables, so drawing more values from one stream never
// perturbs another and batches are bit-reproducible for a fixed seed.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_bits();                 // next 64 random bits
  double uniform();                          // [0, 1), 53-bit resolution
  double normal();                           // standard normal via Box-Muller
  double gamma(double shape);                // shape > 0, unit scale (Marsaglia-Tsang)
  double beta(double a, double b);           // a, b > 0
  int bernoulli(double p);                   // 1 with probability p
  int categorical(const double* probs, int k);  // index by cumulative sums

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace latshift
