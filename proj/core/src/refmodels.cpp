#include "cetlib/refmodels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <stdexcept>
#include <thread>

#include "cetlib/errors.hpp"

namespace cet {

namespace {

void check_pc(const PoissonCounterParams& p) {
  if (!(p.alpha > 0.0) || !(p.beta > 0.0))
    throw ValidationError("poisson counter: rates must be positive");
  if (p.threshold_a < 1 || p.threshold_b < 1)
    throw ValidationError("poisson counter: thresholds must be >= 1");
}

void check_ddm(const DiffusionParams& p) {
  if (!(p.K > 0.0) || !(p.z > 0.0) || !(p.z < p.K))
    throw ValidationError("diffusion: requires 0 < z < K");
  if (!(p.sigma2 > 0.0)) throw ValidationError("diffusion: sigma2 must be positive");
  if (p.series_terms < 1) throw ValidationError("diffusion: series_terms must be >= 1");
}

}  // namespace

double pc_likelihood(const ChoiceTimeOutcome& o, const PoissonCounterParams& p) {
  check_pc(p);
  if (o.response_time < 0.0) return 0.0;
  const ErlangParams ea{p.threshold_a, p.alpha};
  const ErlangParams eb{p.threshold_b, p.beta};
  if (o.choice == Choice::a)
    return erlang_pdf(o.response_time, ea) * (1.0 - erlang_cdf(o.response_time, eb));
  return erlang_pdf(o.response_time, eb) * (1.0 - erlang_cdf(o.response_time, ea));
}

double pc_marginal_time_pdf(double t, const PoissonCounterParams& p) {
  return pc_likelihood({Choice::a, t}, p) + pc_likelihood({Choice::b, t}, p);
}

ModelSummary pc_summary(const PoissonCounterParams& pc) {
  check_pc(pc);
  const double q = pc.alpha / (pc.alpha + pc.beta);
  const double p = reg_inc_beta(q, pc.threshold_a, pc.threshold_b);
  const double ia = reg_inc_beta(q, pc.threshold_a + 1, pc.threshold_b);
  const double ib = reg_inc_beta(1.0 - q, pc.threshold_b + 1, pc.threshold_a);
  ModelSummary s;
  s.p = p;
  const double ma = pc.threshold_a / pc.alpha * ia;
  const double mb = pc.threshold_b / pc.beta * ib;
  s.mu = ma + mb;
  s.mu_a = ma / p;
  s.mu_b = mb / (1.0 - p);
  return s;
}

ChoiceTimeOutcome pc_simulate(const PoissonCounterParams& p, RandomStream& rng) {
  check_pc(p);
  // The streams are independent, so the race outcome is the smaller of two
  // Erlang completion times.
  const double ta = erlang_sample({p.threshold_a, p.alpha}, rng);
  const double tb = erlang_sample({p.threshold_b, p.beta}, rng);
  if (ta < tb) return {Choice::a, ta};
  return {Choice::b, tb};
}

double ddm_hitting_pdf(double t, double z, double K, double drift, double sigma2,
                       int series_terms) {
  if (!(K > 0.0) || !(z > 0.0) || !(z < K))
    throw ValidationError("diffusion: requires 0 < z < K");
  if (!(sigma2 > 0.0)) throw ValidationError("diffusion: sigma2 must be positive");
  if (series_terms < 1) throw ValidationError("diffusion: series_terms must be >= 1");
  if (t <= 0.0) return 0.0;
  const double pref = M_PI * sigma2 / (K * K) *
                      std::exp(-drift * z / sigma2 - drift * drift * t / (2.0 * sigma2));
  const double decay = M_PI * M_PI * sigma2 * t / (2.0 * K * K);
  double sum = 0.0;
  for (int n = 1; n <= series_terms; ++n) {
    const double arg = decay * n * n;
    if (arg > 745.0) break;  // remaining terms underflow to zero
    const double term = n * std::exp(-arg);
    // The envelope n e^(-decay n^2) peaks at arg = 1/2, so past arg >= 1 it
    // only decreases; negligible terms can be skipped.
    if (arg >= 1.0 && term < 1e-14) break;
    sum += term * std::sin(M_PI * z * n / K);
  }
  return pref * sum;
}

double ddm_likelihood(const ChoiceTimeOutcome& o, const DiffusionParams& p) {
  check_ddm(p);
  if (o.choice == Choice::b)
    return ddm_hitting_pdf(o.response_time, p.z, p.K, p.drift, p.sigma2, p.series_terms);
  return ddm_hitting_pdf(o.response_time, p.K - p.z, p.K, -p.drift, p.sigma2,
                         p.series_terms);
}

double ddm_marginal_time_pdf(double t, const DiffusionParams& p) {
  return ddm_likelihood({Choice::a, t}, p) + ddm_likelihood({Choice::b, t}, p);
}

ModelSummary ddm_summary(const DiffusionParams& dp) {
  check_ddm(dp);
  const double z = dp.z, K = dp.K, d = dp.drift, s2 = dp.sigma2;
  ModelSummary s;
  if (std::fabs(d) < 1e-12) {
    s.p = z / K;
    s.mu = z * (K - z) / s2;
  } else {
    // expm1 keeps the ratio accurate for small drift.
    s.p = std::expm1(-2.0 * d * z / s2) / std::expm1(-2.0 * d * K / s2);
    s.mu = (s.p * K - z) / d;
  }
  // Term-wise first moment of the absorption density: each mode decays at
  // rate (n^2 pi^2 s2 / (2 K^2) + d^2 / (2 s2)), so integrating t against it
  // contributes 1/rate^2, giving the (n^2 + c^2)^-2 kernel below.
  const double c = d * K / (M_PI * s2);
  const double c2 = c * c;
  double sum_up = 0.0, sum_dn = 0.0;
  for (int n = 1; n <= dp.series_terms; ++n) {
    const double kern = n / ((n * n + c2) * (n * n + c2));
    sum_up += kern * std::sin(M_PI * (K - z) * n / K);
    sum_dn += kern * std::sin(M_PI * z * n / K);
  }
  const double front = 4.0 * K * K / (M_PI * M_PI * M_PI * s2);
  s.mu_a = front * std::exp(d * (K - z) / s2) * sum_up / s.p;
  s.mu_b = front * std::exp(-d * z / s2) * sum_dn / (1.0 - s.p);
  return s;
}

ChoiceTimeOutcome ddm_simulate(const DiffusionParams& p, double step, RandomStream& rng) {
  check_ddm(p);
  if (!(step > 0.0)) throw ValidationError("diffusion: step must be positive");
  const double sd = std::sqrt(p.sigma2 * step);
  double x = p.z;
  for (std::int64_t i = 1; i <= 2000000000LL; ++i) {
    x += p.drift * step + sd * rng.normal();
    if (x >= p.K) return {Choice::a, i * step};
    if (x <= 0.0) return {Choice::b, i * step};
  }
  throw NumericalError("ddm_simulate: path did not absorb");
}

namespace {

// Fixed shard count keeps batch output independent of how many threads run.
constexpr int kSimShards = 16;

std::vector<ChoiceTimeOutcome> sharded_simulate(
    std::int64_t n, std::uint64_t seed,
    const std::function<ChoiceTimeOutcome(RandomStream&)>& draw) {
  if (n < 1) throw ValidationError("simulate: n must be >= 1");
  std::vector<std::vector<ChoiceTimeOutcome>> shards(kSimShards);
  std::vector<std::exception_ptr> errors(kSimShards);
  auto run_shard = [&](int s) {
    try {
      const std::int64_t lo = n * s / kSimShards;
      const std::int64_t hi = n * (s + 1) / kSimShards;
      RandomStream rng = RandomStream::derive(seed, static_cast<std::uint64_t>(s));
      shards[s].reserve(hi - lo);
      for (std::int64_t i = lo; i < hi; ++i) shards[s].push_back(draw(rng));
    } catch (...) {
      errors[s] = std::current_exception();
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (hw > 1 && n >= 1024) {
    std::vector<std::thread> threads;
    threads.reserve(kSimShards);
    for (int s = 0; s < kSimShards; ++s) threads.emplace_back(run_shard, s);
    for (auto& t : threads) t.join();
  } else {
    for (int s = 0; s < kSimShards; ++s) run_shard(s);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<ChoiceTimeOutcome> out;
  out.reserve(n);
  for (auto& shard : shards) out.insert(out.end(), shard.begin(), shard.end());
  return out;
}

}  // namespace

std::vector<ChoiceTimeOutcome> pc_simulate(const PoissonCounterParams& p, std::int64_t n,
                                           std::uint64_t seed) {
  check_pc(p);
  return sharded_simulate(n, seed,
                          [&](RandomStream& rng) { return pc_simulate(p, rng); });
}

std::vector<ChoiceTimeOutcome> ddm_simulate(const DiffusionParams& p, std::int64_t n,
                                            double step, std::uint64_t seed) {
  check_ddm(p);
  if (!(step > 0.0)) throw ValidationError("diffusion: step must be positive");
  return sharded_simulate(n, seed,
                          [&](RandomStream& rng) { return ddm_simulate(p, step, rng); });
}

}  // namespace cet
