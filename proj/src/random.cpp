#include "mintood/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mintood/error.hpp"

namespace mintood {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw ParameterError("numerics", "uniform_index over an empty range");
  const std::uint64_t bound = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw ParameterError("numerics", "gamma shape must be > 0");
  if (shape < 1.0) {
    double u = 0.0;
    do {
      u = uniform();
    } while (u <= 0.0);
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
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

Vector dirichlet_sample(double alpha, std::size_t k, Rng& rng) {
  if (!(alpha > 0.0)) {
    throw ParameterError("numerics", "dirichlet alpha must be > 0, got " + std::to_string(alpha));
  }
  if (k < 2) throw ParameterError("numerics", "dirichlet k must be >= 2, got " + std::to_string(k));
  Vector draws(k);
  double total = 0.0;
  for (;;) {
    total = 0.0;
    for (double& g : draws) {
      g = rng.gamma(alpha);
      total += g;
    }
    // All-underflow is only reachable for tiny alpha; redraw.
    if (total > 0.0) break;
  }
  for (double& g : draws) g /= total;
  return draws;
}

}  // namespace mintood
