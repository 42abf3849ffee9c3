#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

#include "mintood/tensor.hpp"

namespace mintood {

/// Seeded generator with a platform-independent sample stream.
///
/// std::mt19937_64 has a standardized output sequence, but the standard
/// distributions do not, so uniform/normal/gamma draws are derived here from
/// raw 64-bit words. A given seed reproduces the same samples on every
/// conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Unbiased integer in [0, n).
  std::size_t uniform_index(std::size_t n);

  /// Standard normal (Box-Muller, second variate cached).
  double normal();

  /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 uses the U^{1/shape} boost.
  double gamma(double shape);

  /// Independent child stream; deterministic in (seed, stream).
  Rng split(std::uint64_t stream) const;

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Symmetric Dirichlet draw of length k, via normalized Gamma(alpha) samples.
Vector dirichlet_sample(double alpha, std::size_t k, Rng& rng);

}  // namespace mintood
