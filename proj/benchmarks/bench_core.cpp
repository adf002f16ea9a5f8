#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "cetlib/cet_model.hpp"
#include "cetlib/distributions.hpp"
#include "cetlib/inference.hpp"
#include "cetlib/random.hpp"
#include "cetlib/refmodels.hpp"

namespace {

void BM_HypoexpLogpdf(benchmark::State& state) {
  const cet::HypoExpParams p{1.5, 0.5};
  double t = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cet::hypoexp_logpdf(t, p));
    t = t < 8.0 ? t + 0.1 : 0.1;
  }
}
BENCHMARK(BM_HypoexpLogpdf);

void BM_RegIncBeta(benchmark::State& state) {
  double q = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cet::reg_inc_beta(q, 2.7, 4.3));
    q = q < 0.99 ? q + 0.01 : 0.01;
  }
}
BENCHMARK(BM_RegIncBeta);

void BM_ErlangCdf(benchmark::State& state) {
  const cet::ErlangParams p{4, 2.0};
  double t = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cet::erlang_cdf(t, p));
    t = t < 6.0 ? t + 0.05 : 0.05;
  }
}
BENCHMARK(BM_ErlangCdf);

void BM_DiffusionPdf(benchmark::State& state) {
  const int terms = static_cast<int>(state.range(0));
  double t = 0.02;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cet::ddm_hitting_pdf(t, 2.0, 4.0, 1.0, 1.0, terms));
    t = t < 6.0 ? t + 0.02 : 0.02;
  }
}
BENCHMARK(BM_DiffusionPdf)->Arg(10)->Arg(100)->Arg(1000);

void BM_RaceSummary(benchmark::State& state) {
  const cet::PoissonCounterParams p{3.0, 1.0, 3, 3};
  for (auto _ : state) benchmark::DoNotOptimize(cet::pc_summary(p));
}
BENCHMARK(BM_RaceSummary);

void BM_PairPrediction(benchmark::State& state) {
  const cet::UserParams u{1.37, 0.85, 0.41, 0.20, 1.04};
  double w = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cet::cet_mean_response_time(w, 1.0 - w, u));
    w = w < 0.95 ? w + 0.01 : 0.05;
  }
}
BENCHMARK(BM_PairPrediction);

cet::IndexedData benchmark_data(int n_users) {
  std::vector<cet::ItemUtilities> polls = {
      {"poll1", {0.34, 0.26, 0.18, 0.13, 0.09}},
      {"poll2", {0.30, 0.25, 0.20, 0.15, 0.10}}};
  auto rng = cet::RandomStream::derive(7, 0);
  std::vector<cet::UserParams> users(n_users);
  for (auto& u : users) {
    u.A = rng.truncated_positive_normal(1.37, 0.15);
    u.tau = rng.truncated_positive_normal(0.85, 0.12);
    u.rho = rng.truncated_positive_normal(0.41, 0.08);
    u.epsilon = rng.truncated_positive_normal(0.20, 0.05);
    u.gamma = rng.truncated_positive_normal(1.04, 0.12);
  }
  const auto plan = cet::full_trial_plan(polls, n_users, 1);
  const auto sims = cet::cet_simulate(polls, users, plan, 8);
  cet::Dataset ds;
  for (const auto& s : sims) ds.rows.push_back(s.obs);
  return cet::IndexedData::build(ds);
}

void BM_LogLikelihood(benchmark::State& state) {
  const auto data = benchmark_data(static_cast<int>(state.range(0)));
  auto rng = cet::RandomStream::derive(9, 0);
  const auto st = cet::initial_state(data, cet::ModelKind::choice_engagement_time, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        cet::log_likelihood(st, data, cet::ModelKind::choice_engagement_time));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.trials.size()));
}
BENCHMARK(BM_LogLikelihood)->Arg(10)->Arg(50);

void BM_SamplerSweep(benchmark::State& state) {
  const auto data = benchmark_data(static_cast<int>(state.range(0)));
  cet::SamplerConfig cfg;
  cfg.seed = 10;
  auto rng = cet::RandomStream::derive(cfg.seed, 1);
  auto st = cet::initial_state(data, cet::ModelKind::choice_engagement_time, rng);
  for (auto _ : state)
    cet::sweep_once(st, data, cet::ModelKind::choice_engagement_time, cfg, rng, nullptr);
}
BENCHMARK(BM_SamplerSweep)->Arg(10)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
