#pragma once

#include <cstdint>
#include <random>

namespace obsadj {

// SplitMix64 finalizer; used to derive independent stream seeds from
// (base seed, stream id) pairs.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Deterministic random source.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard library distributions are implementation-defined,
/// so every variate below is built directly from those bits and the stream is
/// bit-identical across compilers and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Marsaglia polar method; caches the second variate.
  double normal();

  // tan(pi (U - 1/2)); no truncation.
  double cauchy();

  bool bernoulli(double prob) { return uniform() < prob; }

  // Sequential-search inversion. Cost is O(mean); the means used by the
  // simulation models are moderate (exp of a standard normal).
  std::int64_t poisson(double mean);

  std::int64_t binomial(int trials, double prob);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace obsadj
