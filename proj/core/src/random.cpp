#include "cetlib/random.hpp"

#include <cmath>
#include <stdexcept>

#include "cetlib/errors.hpp"

namespace cet {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RandomStream RandomStream::derive(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t h = splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  return RandomStream(h);
}

int RandomStream::uniform_index(int n) {
  if (n <= 0) throw std::domain_error("uniform_index: n must be positive");
  const int i = static_cast<int>(uniform() * n);
  return i < n ? i : n - 1;
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

double RandomStream::exponential(double mean) {
  if (!(mean > 0.0)) throw std::domain_error("exponential: mean must be positive");
  return -mean * std::log1p(-uniform());
}

double RandomStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::domain_error("gamma: shape and rate must be positive");
  if (shape < 1.0) {
    // Boost: X ~ Gamma(shape+1), U^(1/shape) * X ~ Gamma(shape).
    const double u = 1.0 - uniform();  // (0, 1]
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double RandomStream::inverse_gamma(double shape, double scale) {
  return 1.0 / gamma(shape, scale);
}

double RandomStream::truncated_positive_normal(double mean, double sd) {
  if (sd < 0.0) throw std::domain_error("truncated_positive_normal: sd must be nonnegative");
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double x = normal(mean, sd);
    if (x > 0.0) return x;
  }
  throw NumericalError("truncated_positive_normal: positive region too improbable");
}

}  // namespace cet
