#pragma once

#include <vector>

#include "cetlib/cet_model.hpp"
#include "cetlib/refmodels.hpp"

namespace cet {

// One row of a mean-time-versus-choice-probability curve.
struct SweepPoint {
  double param_value = 0.0;
  double p = 0.0;
  double mu = 0.0;
  double mu_a = 0.0;
  double mu_b = 0.0;
};

// Poisson counter race over a-stream rates alpha in (0, 1), with beta = 1 - alpha.
std::vector<SweepPoint> pc_sweep(int threshold_a, int threshold_b,
                                 const std::vector<double>& alpha_grid);

// Diffusion over drift values.
std::vector<SweepPoint> ddm_sweep(double z, double K, double sigma2, int series_terms,
                                  const std::vector<double>& drift_grid);

// Choice-engagement-time pair (w, 1-w) over the normalized utility w. The
// response-time stages are choice-independent, so mu_a == mu_b == mu.
std::vector<SweepPoint> cet_sweep(const UserParams& user, const std::vector<double>& w_grid);

}  // namespace cet
