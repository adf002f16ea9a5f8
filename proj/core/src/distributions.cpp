#include "cetlib/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cetlib/errors.hpp"

namespace cet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Relative gap below which the two hypoexponential stages are treated as
// equal-rate; the general branch loses all precision to cancellation there.
constexpr double kEqualRateTol = 1e-8;

void check_erlang(const ErlangParams& p) {
  if (p.shape < 1) throw std::domain_error("erlang: shape must be >= 1");
  if (!(p.rate > 0.0)) throw std::domain_error("erlang: rate must be positive");
}

void check_hypoexp(const HypoExpParams& p) {
  if (!(p.a > 0.0) || !(p.b > 0.0))
    throw std::domain_error("hypoexp: stage means must be positive");
}

void check_inverse_gamma(const InverseGammaParams& p) {
  if (!(p.shape > 0.0) || !(p.scale > 0.0))
    throw std::domain_error("inverse_gamma: shape and scale must be positive");
}

}  // namespace

double erlang_logpdf(double t, const ErlangParams& p) {
  check_erlang(p);
  if (t < 0.0) return kNegInf;
  if (t == 0.0) return p.shape == 1 ? std::log(p.rate) : kNegInf;
  return p.shape * std::log(p.rate) + (p.shape - 1) * std::log(t) - p.rate * t -
         std::lgamma(static_cast<double>(p.shape));
}

double erlang_pdf(double t, const ErlangParams& p) {
  check_erlang(p);
  if (t < 0.0) return 0.0;
  if (t == 0.0) return p.shape == 1 ? p.rate : 0.0;
  return std::exp(erlang_logpdf(t, p));
}

double erlang_cdf(double t, const ErlangParams& p) {
  check_erlang(p);
  if (t <= 0.0) return 0.0;
  // Survival is the Poisson mass below `shape`; terms grow by rt/n, all
  // positive, so the running product is stable.
  const double rt = p.rate * t;
  double term = std::exp(-rt);  // n = 0
  double below = term;
  for (int n = 1; n < p.shape; ++n) {
    term *= rt / n;
    below += term;
  }
  const double cdf = 1.0 - below;
  return cdf < 0.0 ? 0.0 : cdf;
}

double erlang_sample(const ErlangParams& p, RandomStream& rng) {
  check_erlang(p);
  double t = 0.0;
  const double mean = 1.0 / p.rate;
  for (int i = 0; i < p.shape; ++i) t += rng.exponential(mean);
  return t;
}

double hypoexp_pdf(double t, const HypoExpParams& p) {
  check_hypoexp(p);
  if (t < 0.0) return 0.0;
  const double hi = p.a > p.b ? p.a : p.b;
  const double lo = p.a > p.b ? p.b : p.a;
  if (hi - lo < kEqualRateTol * hi) {
    const double m = 0.5 * (p.a + p.b);
    return t / (m * m) * std::exp(-t / m);
  }
  return (std::exp(-t / hi) - std::exp(-t / lo)) / (hi - lo);
}

double hypoexp_logpdf(double t, const HypoExpParams& p) {
  check_hypoexp(p);
  if (t <= 0.0) return kNegInf;
  const double hi = p.a > p.b ? p.a : p.b;
  const double lo = p.a > p.b ? p.b : p.a;
  if (hi - lo < kEqualRateTol * hi) {
    const double m = 0.5 * (p.a + p.b);
    return std::log(t) - 2.0 * std::log(m) - t / m;
  }
  // log[(e^(-t/hi) - e^(-t/lo)) / (hi-lo)] with the dominant exponential
  // factored out; log1p keeps small-t values accurate.
  return -t / hi + std::log1p(-std::exp(-t * (1.0 / lo - 1.0 / hi))) - std::log(hi - lo);
}

double hypoexp_sample(const HypoExpParams& p, RandomStream& rng) {
  check_hypoexp(p);
  return rng.exponential(p.a) + rng.exponential(p.b);
}

double inverse_gamma_logpdf(double x, const InverseGammaParams& p) {
  check_inverse_gamma(p);
  if (x <= 0.0) return kNegInf;
  return p.shape * std::log(p.scale) - std::lgamma(p.shape) -
         (p.shape + 1.0) * std::log(x) - p.scale / x;
}

double inverse_gamma_pdf(double x, const InverseGammaParams& p) {
  check_inverse_gamma(p);
  if (x <= 0.0) return 0.0;
  return std::exp(inverse_gamma_logpdf(x, p));
}

double normal_logpdf(double x, double mean, double variance) {
  if (!(variance > 0.0)) throw std::domain_error("normal: variance must be positive");
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * M_PI * variance) + d * d / variance);
}

double normal_pdf(double x, double mean, double variance) {
  return std::exp(normal_logpdf(x, mean, variance));
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz). Converges in
// O(sqrt(max(a,b))) iterations for q < (a+1)/(a+b+2).
double beta_cont_frac(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("reg_inc_beta: continued fraction did not converge");
}

bool near_integer(double x, double* rounded) {
  const double r = std::round(x);
  if (std::fabs(x - r) < 1e-9 && r >= 1.0) {
    *rounded = r;
    return true;
  }
  return false;
}

}  // namespace

double reg_inc_beta(double q, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("reg_inc_beta: shapes must be positive");
  if (!(q >= 0.0) || !(q <= 1.0))
    throw std::domain_error("reg_inc_beta: q must lie in [0, 1]");
  if (q == 0.0) return 0.0;
  if (q == 1.0) return 1.0;

  // Integer shapes: I_q(a, b) = P(Binomial(a+b-1, q) >= a), summed exactly.
  double ra, rb;
  if (near_integer(a, &ra) && near_integer(b, &rb) && ra + rb <= 1500.0) {
    const int n = static_cast<int>(ra + rb) - 1;
    const int k0 = static_cast<int>(ra);
    const double lq = std::log(q);
    const double l1q = std::log1p(-q);
    const double lgn = std::lgamma(n + 1.0);
    double s = 0.0;
    for (int j = k0; j <= n; ++j) {
      s += std::exp(lgn - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) + j * lq +
                    (n - j) * l1q);
    }
    return s > 1.0 ? 1.0 : s;
  }

  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(q) + b * std::log1p(-q);
  if (q < (a + 1.0) / (a + b + 2.0))
    return std::exp(ln_front) * beta_cont_frac(a, b, q) / a;
  return 1.0 - std::exp(ln_front) * beta_cont_frac(b, a, 1.0 - q) / b;
}

}  // namespace cet
