#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cetlib/errors.hpp"
#include "cetlib/refmodels.hpp"
#include "cetlib/sweep.hpp"
#include "test_support.hpp"

using namespace cet;

namespace {

ModelSummary empirical_summary(const std::vector<ChoiceTimeOutcome>& runs) {
  ModelSummary s;
  double ta = 0.0, tb = 0.0;
  std::int64_t na = 0;
  for (const auto& r : runs) {
    if (r.choice == Choice::a) {
      ++na;
      ta += r.response_time;
    } else {
      tb += r.response_time;
    }
  }
  const auto n = static_cast<double>(runs.size());
  s.p = na / n;
  s.mu = (ta + tb) / n;
  s.mu_a = na > 0 ? ta / na : 0.0;
  s.mu_b = runs.size() - na > 0 ? tb / (n - na) : 0.0;
  return s;
}

}  // namespace

TEST_CASE("race likelihood with unit thresholds is an exponential race") {
  const PoissonCounterParams p{2.0, 3.0, 1, 1};
  for (double t : {0.1, 0.5, 2.0}) {
    CHECK(pc_likelihood({Choice::a, t}, p) ==
          doctest::Approx(2.0 * std::exp(-5.0 * t)).epsilon(1e-13));
    CHECK(pc_likelihood({Choice::b, t}, p) ==
          doctest::Approx(3.0 * std::exp(-5.0 * t)).epsilon(1e-13));
    CHECK(pc_marginal_time_pdf(t, p) ==
          doctest::Approx(5.0 * std::exp(-5.0 * t)).epsilon(1e-13));
  }
  CHECK(pc_summary(p).p == doctest::Approx(2.0 / 5.0).epsilon(1e-13));
}

TEST_CASE("race likelihood pinned composition") {
  const PoissonCounterParams p{3.0, 1.0, 3, 3};
  CHECK(pc_likelihood({Choice::a, 1.0}, p) ==
        doctest::Approx(0.6181528124947787).epsilon(1e-13));
  // Same composition assembled from the published pieces.
  const double by_hand =
      erlang_pdf(1.0, {3, 3.0}) * (1.0 - erlang_cdf(1.0, {3, 1.0}));
  CHECK(pc_likelihood({Choice::a, 1.0}, p) == doctest::Approx(by_hand).epsilon(1e-13));
}

TEST_CASE("race joint likelihood integrates to one") {
  const PoissonCounterParams p{3.0, 1.0, 3, 3};
  const double mass_a = testsup::integrate(
      [&](double t) { return pc_likelihood({Choice::a, t}, p); }, 0.0, 60.0, 1e-11);
  const double mass_b = testsup::integrate(
      [&](double t) { return pc_likelihood({Choice::b, t}, p); }, 0.0, 60.0, 1e-11);
  CHECK(mass_a + mass_b == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(mass_a == doctest::Approx(pc_summary(p).p).epsilon(1e-8));

  const double total = testsup::integrate(
      [&](double t) { return pc_marginal_time_pdf(t, p); }, 0.0, 60.0, 1e-11);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
  // Multi-stage accumulators cannot finish instantly.
  CHECK(pc_marginal_time_pdf(0.0, p) == 0.0);
}

TEST_CASE("race summary closed forms") {
  const PoissonCounterParams fig{3.0, 1.0, 3, 3};
  const ModelSummary s = pc_summary(fig);
  CHECK(s.p == doctest::Approx(0.896484375).epsilon(1e-13));

  // Quadrature oracle for the mean identities.
  const double ma = testsup::integrate(
      [&](double t) { return t * pc_likelihood({Choice::a, t}, fig); }, 0.0, 60.0, 1e-11);
  const double mb = testsup::integrate(
      [&](double t) { return t * pc_likelihood({Choice::b, t}, fig); }, 0.0, 60.0, 1e-11);
  CHECK(s.mu == doctest::Approx(ma + mb).epsilon(1e-8));
  CHECK(s.mu_a == doctest::Approx(ma / s.p).epsilon(1e-8));
  CHECK(s.mu_b == doctest::Approx(mb / (1.0 - s.p)).epsilon(1e-8));
  CHECK(s.p * s.mu_a + (1.0 - s.p) * s.mu_b == doctest::Approx(s.mu).epsilon(1e-10));

  // Equal rates and thresholds split evenly.
  const ModelSummary sym = pc_summary({2.0, 2.0, 4, 4});
  CHECK(sym.p == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sym.mu_a == doctest::Approx(sym.mu_b).epsilon(1e-12));

  // Unequal rates separate the conditional means.
  CHECK(std::abs(s.mu_a - s.mu_b) > 1e-3);
}

TEST_CASE("race summary matches simulation across parameter sets") {
  const std::vector<PoissonCounterParams> sets = {
      {3.0, 1.0, 3, 3}, {1.0, 1.0, 1, 1}, {0.5, 2.0, 2, 5},  {4.0, 3.0, 6, 2},
      {2.0, 2.0, 3, 4}, {1.5, 0.3, 1, 2}, {5.0, 5.0, 10, 10}, {0.7, 1.9, 4, 1},
      {2.5, 0.8, 2, 2}, {1.2, 3.4, 5, 3}};
  std::uint64_t seed = 515151;
  for (const auto& params : sets) {
    const ModelSummary s = pc_summary(params);
    const auto runs = pc_simulate(params, 1000000, seed++);
    const ModelSummary emp = empirical_summary(runs);
    const double se_p = std::sqrt(s.p * (1.0 - s.p) / 1e6);
    CHECK(std::abs(emp.p - s.p) < std::max(3.0 * se_p, 1e-6));
    CHECK(emp.mu == doctest::Approx(s.mu).epsilon(0.01));
    for (const auto& r : runs) CHECK(r.response_time > 0.0);
  }
}

TEST_CASE("race batch simulation is deterministic") {
  const PoissonCounterParams p{3.0, 1.0, 3, 3};
  const auto a = pc_simulate(p, 5000, 42);
  const auto b = pc_simulate(p, 5000, 42);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].choice == b[i].choice);
    CHECK(a[i].response_time == b[i].response_time);
  }
  const auto c = pc_simulate(p, 5000, 43);
  bool any_diff = false;
  for (size_t i = 0; i < c.size(); ++i) any_diff |= (a[i].response_time != c[i].response_time);
  CHECK(any_diff);
}

TEST_CASE("diffusion hitting density geometry checks") {
  CHECK_THROWS_AS(ddm_hitting_pdf(1.0, 0.0, 4.0, 1.0, 1.0, 100), std::exception);
  CHECK_THROWS_AS(ddm_hitting_pdf(1.0, 4.0, 4.0, 1.0, 1.0, 100), std::exception);
  CHECK_THROWS_AS(ddm_hitting_pdf(1.0, -1.0, 4.0, 1.0, 1.0, 100), std::exception);
}

TEST_CASE("diffusion short truncations oscillate, long ones converge") {
  // Short series go negative at small t; the raw value must be returned. With
  // z/K = 1/2 the even terms vanish, so a truncation only dips negative when
  // its last surviving odd term carries a minus sign: 20 terms end on -19
  // (t->0 partial sum -10) while 10 terms end on +9 and stay positive.
  bool negative_seen = false;
  for (double t = 0.01; t < 0.4; t += 0.01) {
    if (ddm_hitting_pdf(t, 2.0, 4.0, 1.0, 1.0, 20) < 0.0) negative_seen = true;
  }
  CHECK(negative_seen);
  double min10 = 0.0;
  for (double t = 0.01; t < 0.4; t += 0.01) {
    min10 = std::min(min10, ddm_hitting_pdf(t, 2.0, 4.0, 1.0, 1.0, 10));
  }
  CHECK(min10 == 0.0);

  // n=1000 vs n=2000 sup-norm on [0.05, 10].
  double sup = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double t = 0.05 + (10.0 - 0.05) * i / 400.0;
    sup = std::max(sup, std::abs(ddm_hitting_pdf(t, 2.0, 4.0, 1.0, 1.0, 1000) -
                                 ddm_hitting_pdf(t, 2.0, 4.0, 1.0, 1.0, 2000)));
  }
  CHECK(sup < 1e-8);
}

TEST_CASE("diffusion branch symmetry at centered start with zero drift") {
  const DiffusionParams sym{2.0, 4.0, 0.0, 1.0, 1000};
  for (double t : {0.3, 1.0, 3.0}) {
    CHECK(ddm_likelihood({Choice::a, t}, sym) ==
          doctest::Approx(ddm_likelihood({Choice::b, t}, sym)).epsilon(1e-12));
    CHECK(ddm_marginal_time_pdf(t, sym) ==
          doctest::Approx(2.0 * ddm_likelihood({Choice::a, t}, sym)).epsilon(1e-12));
  }
}

TEST_CASE("diffusion branch masses integrate to the closed-form split") {
  const DiffusionParams params{2.0, 4.0, 1.0, 1.0, 1000};
  const ModelSummary s = ddm_summary(params);
  CHECK(s.p == doctest::Approx(0.9820137900379085).epsilon(1e-12));
  CHECK(s.mu == doctest::Approx(1.9280551601516338).epsilon(1e-12));

  // Integration starts at 1e-3: below the truncation's damping threshold
  // (t ~ 1e-5 for 1000 terms here) the raw partial sum swings to magnitude
  // ~1e2 while the true density is below 1e-800, so including that sliver
  // measures truncation garbage rather than mass.
  const double t_lo = 1e-3;
  const double mass_a = testsup::integrate(
      [&](double t) { return ddm_likelihood({Choice::a, t}, params); }, t_lo, 40.0, 1e-11);
  const double mass_b = testsup::integrate(
      [&](double t) { return ddm_likelihood({Choice::b, t}, params); }, t_lo, 40.0, 1e-11);
  CHECK(mass_a + mass_b == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(mass_a == doctest::Approx(s.p).epsilon(1e-7));

  // Conditional means against the quadrature oracle.
  const double ta = testsup::integrate(
      [&](double t) { return t * ddm_likelihood({Choice::a, t}, params); }, t_lo, 40.0, 1e-11);
  const double tb = testsup::integrate(
      [&](double t) { return t * ddm_likelihood({Choice::b, t}, params); }, t_lo, 40.0, 1e-11);
  CHECK(s.mu_a == doctest::Approx(ta / mass_a).epsilon(1e-6));
  CHECK(s.mu_b == doctest::Approx(tb / mass_b).epsilon(1e-6));
  CHECK(s.p * s.mu_a + (1.0 - s.p) * s.mu_b == doctest::Approx(s.mu).epsilon(1e-8));
}

TEST_CASE("diffusion summary asymmetric pinned values") {
  const DiffusionParams params{1.2, 4.0, 0.8, 1.5, 4000};
  const ModelSummary s = ddm_summary(params);
  CHECK(s.p == doctest::Approx(0.732235).epsilon(1e-5));
  CHECK(s.mu == doctest::Approx(2.161174).epsilon(1e-5));
  CHECK(s.mu_a == doctest::Approx(2.486941).epsilon(1e-5));
  CHECK(s.mu_b == doctest::Approx(1.270326).epsilon(1e-5));
}

TEST_CASE("diffusion zero-drift limit and continuity") {
  const DiffusionParams zero{1.5, 4.0, 0.0, 2.0, 1000};
  const ModelSummary s0 = ddm_summary(zero);
  CHECK(s0.p == doctest::Approx(1.5 / 4.0).epsilon(1e-12));
  CHECK(s0.mu == doctest::Approx(1.5 * (4.0 - 1.5) / 2.0).epsilon(1e-12));

  // Closed forms approach the limit as drift -> 0.
  DiffusionParams tiny = zero;
  tiny.drift = 1e-7;
  const ModelSummary st = ddm_summary(tiny);
  CHECK(std::abs(st.p - s0.p) < 1e-6);
  CHECK(std::abs(st.mu - s0.mu) < 1e-5);

  DiffusionParams centered{2.0, 4.0, 1e-9, 1.0, 1000};
  CHECK(ddm_summary(centered).p == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("centered thresholds equalize the conditional means") {
  // K = 2z forces mu_a == mu_b for any drift.
  for (double d : {-2.0, -0.5, 0.7, 1.0, 3.0}) {
    const DiffusionParams params{2.0, 4.0, d, 1.0, 10000};
    const ModelSummary s = ddm_summary(params);
    CHECK(std::abs(s.mu_a - s.mu_b) / s.mu <= 1e-6);
  }
}

TEST_CASE("diffusion summary matches path simulation") {
  const std::vector<DiffusionParams> sets = {{2.0, 4.0, 1.0, 1.0, 2000},
                                             {1.2, 4.0, 0.8, 1.5, 2000},
                                             {0.8, 2.0, -0.5, 1.0, 2000},
                                             {1.0, 3.0, 2.0, 2.0, 2000},
                                             {2.5, 5.0, 0.0, 1.0, 2000}};
  std::uint64_t seed = 777;
  for (const auto& params : sets) {
    const ModelSummary s = ddm_summary(params);
    const auto runs = ddm_simulate(params, 100000, 1e-4, seed++);
    const ModelSummary emp = empirical_summary(runs);
    CHECK(std::abs(emp.p - s.p) < std::max(0.02 * std::max(s.p, 1.0 - s.p), 0.004));
    CHECK(emp.mu == doctest::Approx(s.mu).epsilon(0.02));
    for (size_t i = 0; i < 50; ++i) CHECK(runs[i].response_time > 0.0);
  }
}

TEST_CASE("diffusion strong drift forces the upper boundary") {
  const auto runs = ddm_simulate({2.0, 4.0, 30.0, 1.0, 1000}, 2000, 1e-5, 5);
  std::int64_t na = 0;
  for (const auto& r : runs) na += (r.choice == Choice::a);
  CHECK(static_cast<double>(na) / static_cast<double>(runs.size()) > 0.99);
}

TEST_CASE("mean-time-versus-probability sweeps") {
  // Evenly matched accumulators are the slowest: mu peaks at p = 1/2.
  std::vector<double> alphas;
  for (int i = 1; i <= 19; ++i) alphas.push_back(i / 20.0);
  const auto pc_rows = pc_sweep(3, 3, alphas);
  REQUIRE(pc_rows.size() == alphas.size());
  const auto peak = std::max_element(pc_rows.begin(), pc_rows.end(),
                                     [](const auto& l, const auto& r) { return l.mu < r.mu; });
  CHECK(peak->param_value == doctest::Approx(0.5));
  CHECK(peak->p == doctest::Approx(0.5).epsilon(1e-10));

  // Diffusion sweep is symmetric in drift about p = 1/2.
  std::vector<double> drifts;
  for (int i = -10; i <= 10; ++i) drifts.push_back(i * 1.0);
  const auto dd_rows = ddm_sweep(2.0, 4.0, 1.0, 2000, drifts);
  REQUIRE(dd_rows.size() == drifts.size());
  const size_t m = dd_rows.size();
  for (size_t i = 0; i < m / 2; ++i) {
    CHECK(dd_rows[i].p == doctest::Approx(1.0 - dd_rows[m - 1 - i].p).epsilon(1e-9));
    CHECK(dd_rows[i].mu == doctest::Approx(dd_rows[m - 1 - i].mu).epsilon(1e-6));
  }

  // Choice-model sweep: stages are choice-independent, so conditionals agree.
  UserParams u;
  u.tau = 2.0;
  u.A = 1.0;
  u.rho = 0.5;
  u.epsilon = 0.1;
  u.gamma = 1.0;
  std::vector<double> ws;
  for (int i = 1; i <= 99; ++i) ws.push_back(i / 100.0);
  const auto cet_rows = cet_sweep(u, ws);
  REQUIRE(cet_rows.size() == ws.size());
  for (const auto& row : cet_rows) {
    CHECK(row.mu_a == doctest::Approx(row.mu).epsilon(1e-12));
    CHECK(row.mu_b == doctest::Approx(row.mu).epsilon(1e-12));
    CHECK(row.p >= 0.0);
    CHECK(row.p <= 1.0);
  }
  // Ties are slowest here as well.
  const auto cet_peak = std::max_element(
      cet_rows.begin(), cet_rows.end(),
      [](const auto& l, const auto& r) { return l.mu < r.mu; });
  CHECK(cet_peak->param_value == doctest::Approx(0.5));
}
