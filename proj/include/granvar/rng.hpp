#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace granvar {

/// splitmix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of the independent stream `index` under `master`.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Seeded random stream. Engine output is fixed by the standard; every
/// derived variate is computed here from raw bits so sequences are identical
/// on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Stream `index` of a master seed.
  static Rng stream(std::uint64_t master, std::uint64_t index) {
    return Rng(stream_seed(master, index));
  }

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n); n > 0. Unbiased (modulo-threshold rejection).
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  /// Poisson variate by chunked multiplication of uniforms.
  std::uint64_t poisson(double mean);

  /// Index drawn with probability proportional to `weights`.
  std::size_t categorical(std::span<const double> weights);

  /// Uniform point in the disk of radius r centred at the origin.
  void in_disk(double r, double& dx, double& dy);

 private:
  std::mt19937_64 engine_;
};

}  // namespace granvar
