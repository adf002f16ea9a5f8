#pragma once

#include <cstdint>
#include <random>

namespace cet {

// Deterministic random stream. The engine is std::mt19937_64 but every
// transform (uniform, normal, gamma, ...) is implemented here, so a given
// seed reproduces the same draws bit for bit regardless of the standard
// library's distribution internals.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Independent substream for (seed, stream). Ids are mixed through
  // splitmix64 so adjacent ids do not produce correlated engines.
  static RandomStream derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  int uniform_index(int n);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Marsaglia's polar method with a cached spare.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Exponential with the given mean (not rate), by inversion.
  double exponential(double mean);

  // Marsaglia-Tsang; accepts any positive shape (shape < 1 is boosted
  // through the shape+1 draw). `rate` is the inverse scale.
  double gamma(double shape, double rate);

  // Density b^a / Gamma(a) * x^(-a-1) * e^(-b/x); drawn as 1 / Gamma(a, rate=b).
  double inverse_gamma(double shape, double scale);

  // Normal(mean, sd^2) conditioned on being positive. Rejection sampling;
  // throws NumericalError if the positive region is vanishingly rare.
  double truncated_positive_normal(double mean, double sd);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cet
