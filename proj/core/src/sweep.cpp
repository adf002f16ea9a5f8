#include "cetlib/sweep.hpp"

#include <stdexcept>

namespace cet {

std::vector<SweepPoint> pc_sweep(int threshold_a, int threshold_b,
                                 const std::vector<double>& alpha_grid) {
  std::vector<SweepPoint> out;
  out.reserve(alpha_grid.size());
  for (double alpha : alpha_grid) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
      throw std::domain_error("pc_sweep: alpha must lie in (0, 1)");
    const ModelSummary s = pc_summary({alpha, 1.0 - alpha, threshold_a, threshold_b});
    out.push_back({alpha, s.p, s.mu, s.mu_a, s.mu_b});
  }
  return out;
}

std::vector<SweepPoint> ddm_sweep(double z, double K, double sigma2, int series_terms,
                                  const std::vector<double>& drift_grid) {
  std::vector<SweepPoint> out;
  out.reserve(drift_grid.size());
  for (double d : drift_grid) {
    const ModelSummary s = ddm_summary({z, K, d, sigma2, series_terms});
    out.push_back({d, s.p, s.mu, s.mu_a, s.mu_b});
  }
  return out;
}

std::vector<SweepPoint> cet_sweep(const UserParams& user, const std::vector<double>& w_grid) {
  std::vector<SweepPoint> out;
  out.reserve(w_grid.size());
  for (double w : w_grid) {
    if (!(w >= 0.0) || !(w <= 1.0))
      throw std::domain_error("cet_sweep: w must lie in [0, 1]");
    const PairPrediction pred = cet_mean_response_time(w, 1.0 - w, user);
    out.push_back({w, pred.p, pred.mu, pred.mu, pred.mu});
  }
  return out;
}

}  // namespace cet
