#pragma once

#include <cstdint>
#include <vector>

#include "cetlib/distributions.hpp"
#include "cetlib/random.hpp"

namespace cet {

enum class Choice { a, b };

struct ChoiceTimeOutcome {
  Choice choice = Choice::a;
  double response_time = 0.0;
};

// Two independent Poisson evidence streams racing to their thresholds; the
// first stream to accumulate its threshold count wins.
struct PoissonCounterParams {
  double alpha = 1.0;  // arrival rate of the a stream
  double beta = 1.0;   // arrival rate of the b stream
  int threshold_a = 1;
  int threshold_b = 1;
};

// Brownian evidence with absorbing boundaries: drift toward the upper
// boundary K (choice a); the lower boundary 0 is choice b.
struct DiffusionParams {
  double z = 1.0;       // starting point, 0 < z < K
  double K = 2.0;       // upper boundary
  double drift = 0.0;
  double sigma2 = 1.0;  // infinitesimal variance
  int series_terms = 1000;
};

// Closed-form choice/time moments of a race model.
struct ModelSummary {
  double p = 0.0;     // probability of choice a
  double mu = 0.0;    // unconditional mean decision time
  double mu_a = 0.0;  // mean decision time conditional on choice a
  double mu_b = 0.0;  // mean decision time conditional on choice b
};

// Joint density of (choice, time): winner's Erlang arrival density times the
// loser's survival.
double pc_likelihood(const ChoiceTimeOutcome& outcome, const PoissonCounterParams& params);
double pc_marginal_time_pdf(double t, const PoissonCounterParams& params);
ModelSummary pc_summary(const PoissonCounterParams& params);
ChoiceTimeOutcome pc_simulate(const PoissonCounterParams& params, RandomStream& rng);

// Batch replications, partitioned over a fixed number of independent
// substreams of `seed` so the result is deterministic however many threads
// actually run.
std::vector<ChoiceTimeOutcome> pc_simulate(const PoissonCounterParams& params,
                                           std::int64_t n, std::uint64_t seed);

// Truncated series for the lower-boundary absorption-time density
// u(t, z, K, drift, sigma2); the upper branch is u(t, K-z, K, -drift, sigma2).
// Short truncations oscillate negative at small t; the raw value is returned
// so callers can see the truncation error. Clamping belongs in plot output
// only, never in likelihoods.
double ddm_hitting_pdf(double t, double z, double K, double drift, double sigma2,
                       int series_terms);
double ddm_likelihood(const ChoiceTimeOutcome& outcome, const DiffusionParams& params);
double ddm_marginal_time_pdf(double t, const DiffusionParams& params);
// Closed-form p and mu; conditional means via the term-wise integrated
// series. drift == 0 uses the analytic limits for p and mu.
ModelSummary ddm_summary(const DiffusionParams& params);
// Euler-Maruyama path simulation with the given time step. First-exit times
// are biased upward by O(sqrt(step)) because crossings inside a step are
// missed; shrink the step rather than correcting for it.
ChoiceTimeOutcome ddm_simulate(const DiffusionParams& params, double step, RandomStream& rng);

std::vector<ChoiceTimeOutcome> ddm_simulate(const DiffusionParams& params, std::int64_t n,
                                            double step, std::uint64_t seed);

}  // namespace cet
