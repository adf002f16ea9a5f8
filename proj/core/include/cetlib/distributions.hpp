#pragma once

#include "cetlib/random.hpp"

namespace cet {

// Sum of `shape` iid exponential stages with the given per-stage rate.
struct ErlangParams {
  int shape = 1;      // >= 1
  double rate = 1.0;  // > 0
};

// Sum of two independent exponentials with means a and b (means, not rates).
struct HypoExpParams {
  double a = 1.0;
  double b = 1.0;
};

struct InverseGammaParams {
  double shape = 1.0;
  double scale = 1.0;
};

double erlang_pdf(double t, const ErlangParams& p);
double erlang_logpdf(double t, const ErlangParams& p);
// P(T <= t) in the Poisson-tail form 1 - sum_{n<shape} (rate*t)^n e^(-rate*t)/n!.
double erlang_cdf(double t, const ErlangParams& p);
double erlang_sample(const ErlangParams& p, RandomStream& rng);

double hypoexp_pdf(double t, const HypoExpParams& p);
double hypoexp_logpdf(double t, const HypoExpParams& p);
double hypoexp_sample(const HypoExpParams& p, RandomStream& rng);

double inverse_gamma_pdf(double x, const InverseGammaParams& p);
double inverse_gamma_logpdf(double x, const InverseGammaParams& p);

double normal_pdf(double x, double mean, double variance);
double normal_logpdf(double x, double mean, double variance);

// Regularized incomplete beta I_q(a, b). Integer shapes take the exact
// binomial-tail sum; general shapes use a Lentz continued fraction evaluated
// to absolute accuracy well below 1e-12.
double reg_inc_beta(double q, double a, double b);

}  // namespace cet
