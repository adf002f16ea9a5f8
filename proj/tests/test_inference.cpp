#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cetlib/cet_model.hpp"
#include "cetlib/dataset.hpp"
#include "cetlib/distributions.hpp"
#include "cetlib/errors.hpp"
#include "cetlib/inference.hpp"
#include "cetlib/stats.hpp"
#include "test_support.hpp"

using namespace cet;

namespace {

Observation obs(std::string poll, std::string user, std::string a, std::string b,
                bool chose_a, double t, int k = 1) {
  Observation o;
  o.poll_id = std::move(poll);
  o.user_id = std::move(user);
  o.item_i = std::move(a);
  o.item_j = std::move(b);
  o.chose_i = chose_a;
  o.response_time = t;
  o.trial_k = k;
  return o;
}

// Three trials of one user across a three-item poll; utilities in sorted-id
// order are {0.5 (x), 0.3 (y), 0.2 (z)}.
IndexedData fixture_data() {
  Dataset d;
  d.rows.push_back(obs("p", "u", "x", "y", true, 1.4));
  d.rows.push_back(obs("p", "u", "x", "z", false, 2.2));
  d.rows.push_back(obs("p", "u", "y", "z", true, 0.9));
  return IndexedData::build(d);
}

ModelState fixture_state() {
  ModelState st;
  st.global.mean = UserState{};
  st.global.variance = UserState{0.25, 0.25, 0.25, 0.25, 0.25, 0.25};
  UserState us;
  us.A = 1.3;
  us.tau = 0.7;
  us.rho = 0.35;
  us.epsilon = 0.12;
  us.gamma = 0.9;
  us.mu = 1.6;
  st.users = {us};
  st.utilities = {{0.5, 0.3, 0.2}};
  return st;
}

// Direct product-of-densities evaluation from the published building blocks.
double oracle_loglik(const ModelState& st, const IndexedData& data, ModelKind kind) {
  double total = 0.0;
  for (const auto& tr : data.trials) {
    const auto& w = st.utilities[tr.poll];
    const auto& us = st.users[tr.user];
    const double wa = w[tr.item_a], wb = w[tr.item_b];

    double p = wa / (wa + wb);
    if (kind != ModelKind::choice) p = cet_choice_prob(wa, wb, us.epsilon);
    total += tr.chose_a ? std::log(p) : std::log(1.0 - p);

    double delta = us.mu;
    if (kind == ModelKind::choice_engagement_time) {
      UserParams up;
      up.A = us.A;
      up.tau = us.tau;
      up.rho = us.rho;
      up.epsilon = us.epsilon;
      up.gamma = us.gamma;
      delta = cet_mean_response_time(wa, wb, up).delta;
    }
    total += hypoexp_logpdf(tr.t, {us.tau, delta});
  }
  return total;
}

}  // namespace

TEST_CASE("model kind names round-trip") {
  CHECK(to_string(ModelKind::choice) == "choice");
  CHECK(to_string(ModelKind::choice_engagement) == "choice_engagement");
  CHECK(to_string(ModelKind::choice_engagement_time) == "choice_engagement_time");
  CHECK(model_kind_from_string("choice") == ModelKind::choice);
  CHECK(model_kind_from_string("ce") == ModelKind::choice_engagement);
  CHECK(model_kind_from_string("cet") == ModelKind::choice_engagement_time);
  CHECK(model_kind_from_string("choice_engagement_time") ==
        ModelKind::choice_engagement_time);
  CHECK(!model_kind_from_string("drift").has_value());

  CHECK(active_user_params(ModelKind::choice).size() == 2);
  CHECK(active_user_params(ModelKind::choice_engagement).size() == 3);
  CHECK(active_user_params(ModelKind::choice_engagement_time).size() == 5);
}

TEST_CASE("indexed data sorts ids and groups trials") {
  Dataset d;
  d.rows.push_back(obs("zz", "bob", "b", "a", true, 1.0));
  d.rows.push_back(obs("aa", "alice", "d", "c", false, 2.0));
  d.rows.push_back(obs("zz", "alice", "a", "c", true, 0.5));
  const IndexedData ix = IndexedData::build(d);
  CHECK(ix.poll_ids == std::vector<std::string>{"aa", "zz"});
  CHECK(ix.user_ids == std::vector<std::string>{"alice", "bob"});
  CHECK(ix.item_ids[0] == std::vector<std::string>{"c", "d"});
  CHECK(ix.item_ids[1] == std::vector<std::string>{"a", "b", "c"});
  CHECK(ix.by_user[0].size() == 2);
  CHECK(ix.by_user[1].size() == 1);
  CHECK(ix.by_poll[1].size() == 2);

  Dataset empty;
  CHECK_THROWS_AS(IndexedData::build(empty), ValidationError);
}

TEST_CASE("parameter layout names and indices") {
  const IndexedData ix = fixture_data();
  const ParameterLayout L = ParameterLayout::build(ix, ModelKind::choice_engagement_time);
  // 5 means + 5 variances + 5 user params + 3 utilities.
  REQUIRE(L.size() == 18);
  CHECK(L.names[0] == "A");
  CHECK(L.names[4] == "gamma");
  CHECK(L.names[5] == "sigma2_A");
  CHECK(L.names[L.user_param_index(UserParamName::tau, 0)] == "tau_u[u]");
  CHECK(L.names[L.utility_index(0, 0)] == "w[p][x]");
  CHECK(L.names[L.utility_index(0, 2)] == "w[p][z]");
  CHECK(L.global_mean_index(UserParamName::A) == 0);
  CHECK(L.global_variance_index(UserParamName::gamma) == 9);
  CHECK_THROWS_AS(L.global_mean_index(UserParamName::mu), std::invalid_argument);

  const ModelState st = fixture_state();
  const std::vector<double> flat = L.flatten(st);
  REQUIRE(static_cast<int>(flat.size()) == L.size());
  const ModelState back = L.unflatten(flat);
  CHECK(back.users[0].tau == st.users[0].tau);
  CHECK(back.users[0].gamma == st.users[0].gamma);
  CHECK(back.utilities[0] == st.utilities[0]);
  CHECK(L.flatten(back) == flat);

  const ParameterLayout Lc = ParameterLayout::build(ix, ModelKind::choice);
  CHECK(Lc.names[0] == "tau");
  CHECK(Lc.names[1] == "mu");
  CHECK(Lc.names[2] == "sigma2_tau");
  CHECK(Lc.names[Lc.user_param_index(UserParamName::mu, 0)] == "mu_u[u]");
  // Inactive slots come back pinned to zero engagement.
  ModelState stc = Lc.unflatten(Lc.flatten(fixture_state()));
  CHECK(stc.users[0].epsilon == 0.0);
}

TEST_CASE("log likelihood single-trial closed form") {
  Dataset d;
  d.rows.push_back(obs("p", "u", "x", "y", true, 1.7));
  const IndexedData ix = IndexedData::build(d);

  ModelState st = fixture_state();
  st.utilities = {{0.5, 0.5}};
  st.users[0].epsilon = 0.0;

  // Tied utilities with zero engagement noise: an even coin times the
  // two-stage density whose decision mean is A/rho.
  const double delta = st.users[0].A / st.users[0].rho;
  const double expect =
      std::log(0.5) + hypoexp_logpdf(1.7, {st.users[0].tau, delta});
  CHECK(log_likelihood(st, ix, ModelKind::choice_engagement_time) ==
        doctest::Approx(expect).epsilon(1e-13));

  // Either choice has the same mass at a tie.
  Dataset d2 = d;
  d2.rows[0].chose_i = false;
  CHECK(log_likelihood(st, IndexedData::build(d2), ModelKind::choice_engagement_time) ==
        doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("log likelihood matches the direct product oracle") {
  const IndexedData ix = fixture_data();
  const ModelState st = fixture_state();
  for (ModelKind kind : {ModelKind::choice, ModelKind::choice_engagement,
                         ModelKind::choice_engagement_time}) {
    CHECK(log_likelihood(st, ix, kind) ==
          doctest::Approx(oracle_loglik(st, ix, kind)).epsilon(1e-12));
  }
}

TEST_CASE("log likelihood sums over independent trials") {
  Dataset one, two, both;
  one.rows.push_back(obs("p", "u", "x", "y", true, 1.4));
  two.rows.push_back(obs("p", "u", "x", "z", false, 2.2, 2));
  both.rows = one.rows;
  both.rows.push_back(two.rows[0]);

  ModelState st = fixture_state();
  const auto ll = [&](const Dataset& d) {
    return log_likelihood(st, IndexedData::build(d), ModelKind::choice_engagement_time);
  };
  // The z item is absent from `one`, so evaluate both singles against the
  // full index to keep utilities aligned.
  const IndexedData full = IndexedData::build(both);
  double per_trial = 0.0;
  for (const auto& tr : full.trials) {
    IndexedData solo = full;
    solo.trials = {tr};
    solo.by_user.assign(full.by_user.size(), {});
    solo.by_poll.assign(full.by_poll.size(), {});
    solo.by_user[tr.user].push_back(0);
    solo.by_poll[tr.poll].push_back(0);
    per_trial += log_likelihood(st, solo, ModelKind::choice_engagement_time);
  }
  CHECK(ll(both) == doctest::Approx(per_trial).epsilon(1e-10));
}

TEST_CASE("engagement-free reduction nests exactly") {
  const IndexedData ix = fixture_data();
  ModelState st = fixture_state();
  st.users[0].epsilon = 0.0;
  CHECK(log_likelihood(st, ix, ModelKind::choice_engagement) ==
        log_likelihood(st, ix, ModelKind::choice));
}

TEST_CASE("invalid states score minus infinity instead of throwing") {
  const IndexedData ix = fixture_data();
  ModelState st = fixture_state();
  CHECK(validate_state(st, ModelKind::choice_engagement_time));

  ModelState bad = st;
  bad.users[0].tau = -0.1;
  CHECK(!validate_state(bad, ModelKind::choice_engagement_time));
  CHECK(std::isinf(log_likelihood(bad, ix, ModelKind::choice_engagement_time)));

  bad = st;
  bad.users[0].epsilon = -1e-9;
  CHECK(!validate_state(bad, ModelKind::choice_engagement_time));

  bad = st;
  bad.utilities[0] = {0.5, 0.6, -0.1};
  CHECK(!validate_state(bad, ModelKind::choice_engagement_time));
  CHECK(std::isinf(log_likelihood(bad, ix, ModelKind::choice_engagement_time)));

  bad = st;
  bad.global.variance.A = 0.0;
  CHECK(!validate_state(bad, ModelKind::choice_engagement_time));

  // Zero engagement noise is a legal boundary value.
  ModelState edge = st;
  edge.users[0].epsilon = 0.0;
  CHECK(validate_state(edge, ModelKind::choice_engagement_time));
}

TEST_CASE("population mean posterior closed form") {
  Hyperpriors hyper;  // prior variance 1e4
  std::vector<double> vals(10, 1.0);
  const NormalPosterior post = global_mean_posterior(vals, 1.0, hyper);
  CHECK(post.mean == doctest::Approx(1.0 / (1.0 + 1e-5)).epsilon(1e-12));
  CHECK(post.variance == doctest::Approx(1.0 / (10.0 + 1e-4)).epsilon(1e-12));

  // Nearly flat prior pins the posterior mean at the sample mean.
  Hyperpriors flat;
  flat.mean_prior_variance = 1e12;
  std::vector<double> vals2 = {0.4, 1.1, 2.5};
  const NormalPosterior post2 = global_mean_posterior(vals2, 0.7, flat);
  const double kbar = (0.4 + 1.1 + 2.5) / 3.0;
  CHECK(post2.mean == doctest::Approx(kbar).epsilon(1e-9));
  CHECK(post2.variance == doctest::Approx(0.7 / 3.0).epsilon(1e-9));

  // Monte Carlo moments of the update itself.
  RandomStream rng(5150);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = gibbs_update_global_mean(vals, 1.0, hyper, rng);
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean - post.mean) < 3.0 * std::sqrt(post.variance / n));
  CHECK(var == doctest::Approx(post.variance).epsilon(0.05));
}

TEST_CASE("population variance posterior closed form") {
  Hyperpriors hyper;  // shape 1, scale 1
  std::vector<double> vals = {1.0, 3.0, 2.0, 2.0};
  const InverseGammaPosterior post = global_variance_posterior(vals, 2.0, hyper);
  CHECK(post.shape == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(post.scale == doctest::Approx(2.0).epsilon(1e-14));

  const InverseGammaPosterior tight =
      global_variance_posterior({2.0, 2.0, 2.0, 2.0}, 2.0, hyper);
  CHECK(tight.shape == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(tight.scale == doctest::Approx(1.0).epsilon(1e-14));

  // InverseGamma(3, 2) has mean 1 and variance 1.
  RandomStream rng(8080);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = gibbs_update_global_variance(vals, 2.0, hyper, rng);
    CHECK(x > 0.0);
    sum += x;
  }
  CHECK(std::abs(sum / n - 1.0) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("user-parameter acceptance ratio against a direct oracle") {
  const IndexedData ix = fixture_data();
  const ModelState st = fixture_state();
  const ModelKind kind = ModelKind::choice_engagement_time;

  // Identity proposals are always accepted.
  for (UserParamName p : active_user_params(kind)) {
    CHECK(mh_log_acceptance_ratio(st, ix, kind, 0, p, st.users[0].field(p)) ==
          doctest::Approx(0.0).epsilon(1e-14));
  }

  // Out-of-domain proposals are rejected outright.
  CHECK(std::isinf(mh_log_acceptance_ratio(st, ix, kind, 0, UserParamName::tau, -0.2)));
  CHECK(std::isinf(mh_log_acceptance_ratio(st, ix, kind, 0, UserParamName::A, 0.0)));
  CHECK(std::isinf(
      mh_log_acceptance_ratio(st, ix, kind, 0, UserParamName::epsilon, -1e-12)));
  // Zero is inside the engagement-noise domain.
  CHECK(std::isfinite(
      mh_log_acceptance_ratio(st, ix, kind, 0, UserParamName::epsilon, 0.0)));

  // Inactive parameters are a caller error.
  CHECK_THROWS_AS(mh_log_acceptance_ratio(st, ix, kind, 0, UserParamName::mu, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(mh_log_acceptance_ratio(st, ix, kind, 5, UserParamName::tau, 1.0),
                  std::invalid_argument);

  // Prior ratio plus likelihood ratio, via full-state evaluation. The choice
  // factor cancels for every parameter except the engagement noise, so the
  // full-likelihood difference is the exact oracle in all cases.
  for (UserParamName p : active_user_params(kind)) {
    const double cur = st.users[0].field(p);
    for (double prop : {cur * 0.9, cur * 1.15}) {
      ModelState moved = st;
      moved.users[0].field(p) = prop;
      const double prior_diff =
          normal_logpdf(prop, st.global.mean.field(p), st.global.variance.field(p)) -
          normal_logpdf(cur, st.global.mean.field(p), st.global.variance.field(p));
      const double lik_diff = log_likelihood(moved, ix, kind) - log_likelihood(st, ix, kind);
      CHECK(mh_log_acceptance_ratio(st, ix, kind, 0, p, prop) ==
            doctest::Approx(prior_diff + lik_diff).epsilon(1e-12));
    }
  }

  // The mh step keeps the state valid across repeated proposals.
  ModelState walked = st;
  SamplerConfig cfg;
  RandomStream rng(100);
  for (int i = 0; i < 200; ++i) {
    mh_update_user_param(walked, ix, kind, 0, UserParamName::tau, cfg, rng);
    CHECK(validate_state(walked, kind));
  }
}

TEST_CASE("utility acceptance ratio against a direct oracle") {
  // Two users sharing a poll so the ratio spans multiple users' trials.
  Dataset d;
  d.rows.push_back(obs("p", "u1", "x", "y", true, 1.0));
  d.rows.push_back(obs("p", "u1", "x", "z", true, 1.8));
  d.rows.push_back(obs("p", "u2", "y", "z", false, 0.7));
  d.rows.push_back(obs("p", "u2", "x", "y", false, 2.4));
  const IndexedData ix = IndexedData::build(d);

  ModelState st = fixture_state();
  st.users = {st.users[0], st.users[0]};
  st.users[1].tau = 0.9;
  st.users[1].gamma = 1.4;
  st.utilities = {{0.5, 0.3, 0.2}};
  const ModelKind kind = ModelKind::choice_engagement_time;

  CHECK(utility_log_acceptance_ratio(st, ix, kind, 0, 0, 0.5) ==
        doctest::Approx(0.0).epsilon(1e-14));
  CHECK(std::isinf(utility_log_acceptance_ratio(st, ix, kind, 0, 0, -0.1)));
  CHECK(std::isinf(utility_log_acceptance_ratio(st, ix, kind, 0, 0, 1.1)));
  // Pushing the free mass past 1 starves the last coordinate.
  CHECK(std::isinf(utility_log_acceptance_ratio(st, ix, kind, 0, 0, 0.71)));
  // The last coordinate is not a free parameter.
  CHECK_THROWS_AS(utility_log_acceptance_ratio(st, ix, kind, 0, 2, 0.3),
                  std::invalid_argument);

  for (double prop : {0.45, 0.62}) {
    ModelState moved = st;
    moved.utilities[0][0] = prop;
    moved.utilities[0][2] = 1.0 - prop - moved.utilities[0][1];
    const double lik_diff =
        log_likelihood(moved, ix, kind) - log_likelihood(st, ix, kind);
    CHECK(utility_log_acceptance_ratio(st, ix, kind, 0, 0, prop) ==
          doctest::Approx(lik_diff).epsilon(1e-12));
  }

  SamplerConfig cfg;
  RandomStream rng(4);
  for (int i = 0; i < 300; ++i) {
    mh_update_item_utility(st, ix, kind, 0, i % 2, cfg, rng);
    CHECK(validate_state(st, kind));
    double sum = 0.0;
    for (double w : st.utilities[0]) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("sampler runs on a degenerate dataset") {
  Dataset d;
  d.rows.push_back(obs("p", "u", "x", "y", true, 1.0));
  const IndexedData ix = IndexedData::build(d);

  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.iterations = 60;
  cfg.burn_in = 10;
  cfg.seed = 7;
  const PosteriorSamples samples = run_sampler(ix, ModelKind::choice_engagement_time, cfg);
  REQUIRE(samples.n_chains() == 2);
  for (const auto& chain : samples.draws) {
    REQUIRE(static_cast<int>(chain.size()) == 50);
    for (const auto& draw : chain) {
      CHECK(validate_state(samples.layout.unflatten(draw),
                           ModelKind::choice_engagement_time));
    }
  }
}

TEST_CASE("sampler is deterministic and scheduling independent") {
  Dataset d;
  d.rows.push_back(obs("p", "u1", "x", "y", true, 1.0));
  d.rows.push_back(obs("p", "u2", "x", "y", false, 2.0));
  d.rows.push_back(obs("q", "u1", "a", "b", true, 0.6));
  const IndexedData ix = IndexedData::build(d);

  SamplerConfig cfg;
  cfg.chains = 3;
  cfg.iterations = 40;
  cfg.burn_in = 5;
  cfg.seed = 99;
  const PosteriorSamples a = run_sampler(ix, ModelKind::choice_engagement, cfg);
  const PosteriorSamples b = run_sampler(ix, ModelKind::choice_engagement, cfg);
  CHECK(a.draws == b.draws);

  SamplerConfig seq = cfg;
  seq.parallel_chains = false;
  const PosteriorSamples c = run_sampler(ix, ModelKind::choice_engagement, seq);
  CHECK(a.draws == c.draws);
  CHECK(a.iterations == c.iterations);

  SamplerConfig other = cfg;
  other.seed = 100;
  const PosteriorSamples e = run_sampler(ix, ModelKind::choice_engagement, other);
  CHECK(a.draws != e.draws);
}

TEST_CASE("thinning controls the recorded iterations") {
  Dataset d;
  d.rows.push_back(obs("p", "u", "x", "y", true, 1.0));
  const IndexedData ix = IndexedData::build(d);

  SamplerConfig cfg;
  cfg.chains = 1;
  cfg.iterations = 100;
  cfg.burn_in = 20;
  cfg.thinning = 4;
  cfg.seed = 3;
  const PosteriorSamples s = run_sampler(ix, ModelKind::choice, cfg);
  REQUIRE(s.draws[0].size() == 20);
  REQUIRE(s.iterations[0].size() == 20);
  CHECK(s.iterations[0][0] == 21);
  CHECK(s.iterations[0][1] == 25);
  CHECK(s.iterations[0][19] == 97);
}

TEST_CASE("sampler validates its configuration") {
  Dataset d;
  d.rows.push_back(obs("p", "u", "x", "y", true, 1.0));
  const IndexedData ix = IndexedData::build(d);

  SamplerConfig cfg;
  cfg.iterations = 10;
  cfg.burn_in = 10;
  CHECK_THROWS_AS(run_sampler(ix, ModelKind::choice, cfg), ValidationError);
  cfg = SamplerConfig{};
  cfg.chains = 0;
  CHECK_THROWS_AS(run_sampler(ix, ModelKind::choice, cfg), ValidationError);
  cfg = SamplerConfig{};
  cfg.proposal_sd = 0.0;
  CHECK_THROWS_AS(run_sampler(ix, ModelKind::choice, cfg), ValidationError);
  cfg = SamplerConfig{};
  cfg.thinning = 0;
  CHECK_THROWS_AS(run_sampler(ix, ModelKind::choice, cfg), ValidationError);
}

TEST_CASE("acceptance ledger counts every proposal") {
  Dataset d;
  d.rows.push_back(obs("p", "u1", "x", "y", true, 1.0));
  d.rows.push_back(obs("p", "u2", "y", "z", false, 2.0));
  const IndexedData ix = IndexedData::build(d);

  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.iterations = 30;
  cfg.burn_in = 5;
  cfg.seed = 21;
  const PosteriorSamples s = run_sampler(ix, ModelKind::choice_engagement_time, cfg);
  const std::int64_t per_param = 2LL * 30 * 2;  // chains * iterations * users
  for (const char* key : {"A_u", "tau_u", "rho_u", "epsilon_u", "gamma_u"}) {
    REQUIRE(s.acceptance.count(key) == 1);
    CHECK(s.acceptance.at(key).proposed == per_param);
    CHECK(s.acceptance.at(key).accepted <= per_param);
  }
  // One poll with three items has two free coordinates.
  REQUIRE(s.acceptance.count("w") == 1);
  CHECK(s.acceptance.at("w").proposed == 2LL * 30 * 2);
}

TEST_CASE("split-chain scale reduction") {
  // Constant chains are perfectly mixed by convention.
  CHECK(split_rhat({{1.0, 1.0, 1.0, 1.0}, {1.0, 1.0, 1.0, 1.0}}) == 1.0);
  // Too short to split.
  CHECK(std::isnan(split_rhat({{1.0, 2.0, 3.0}})));
  // Constant within chains but separated between them.
  CHECK(std::isinf(split_rhat({{1.0, 1.0, 1.0, 1.0}, {2.0, 2.0, 2.0, 2.0}})));

  // Well-mixed noise lands near 1; separated means blow it up.
  RandomStream rng(17);
  std::vector<std::vector<double>> good(3), bad(3);
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 2000; ++i) {
      good[c].push_back(rng.normal(0.0, 1.0));
      bad[c].push_back(rng.normal(c * 5.0, 1.0));
    }
  }
  CHECK(split_rhat(good) < 1.02);
  CHECK(split_rhat(bad) > 2.0);
}

TEST_CASE("summaries expose percentile and mean oracles") {
  Dataset d;
  d.rows.push_back(obs("p", "u", "x", "y", true, 1.0));
  const IndexedData ix = IndexedData::build(d);
  SamplerConfig cfg;
  cfg.chains = 1;
  cfg.iterations = 13;
  cfg.burn_in = 10;
  cfg.seed = 2;
  PosteriorSamples s = run_sampler(ix, ModelKind::choice, cfg);
  REQUIRE(s.draws[0].size() == 3);

  // Overwrite one tracked parameter with known values.
  const int slot = s.layout.global_mean_index(UserParamName::tau);
  s.draws[0][0][slot] = 1.0;
  s.draws[0][1][slot] = 3.0;
  s.draws[0][2][slot] = 2.0;
  const auto table = summarize(s);
  const ParameterSummary& ps = table.at("tau");
  CHECK(ps.mean == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(ps.median == doctest::Approx(2.0).epsilon(1e-14));
  // Linear-interpolation percentiles on the sorted pool {1,2,3}.
  CHECK(ps.ci5 == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(ps.ci95 == doctest::Approx(2.9).epsilon(1e-12));

  // A constant parameter collapses to a zero-width interval.
  for (auto& draw : s.draws[0]) draw[slot] = 0.75;
  const auto table2 = summarize(s);
  CHECK(table2.at("tau").mean == 0.75);
  CHECK(table2.at("tau").ci5 == 0.75);
  CHECK(table2.at("tau").ci95 == 0.75);
}

TEST_CASE("posterior mean state repairs the simplex") {
  Dataset d;
  d.rows.push_back(obs("p", "u1", "x", "y", true, 1.0));
  d.rows.push_back(obs("p", "u2", "y", "z", false, 2.0));
  const IndexedData ix = IndexedData::build(d);
  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.iterations = 50;
  cfg.burn_in = 10;
  cfg.seed = 5;
  const PosteriorSamples s = run_sampler(ix, ModelKind::choice_engagement_time, cfg);
  const ModelState mean_state = posterior_mean_state(s);
  CHECK(validate_state(mean_state, ModelKind::choice_engagement_time));
  double sum = 0.0;
  for (double w : mean_state.utilities[0]) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("deviance information criterion bookkeeping") {
  Dataset d;
  d.rows.push_back(obs("p", "u", "x", "y", true, 1.0));
  const IndexedData ix = IndexedData::build(d);

  // A single retained draw has zero effective parameters.
  SamplerConfig cfg;
  cfg.chains = 1;
  cfg.iterations = 11;
  cfg.burn_in = 10;
  cfg.seed = 8;
  const PosteriorSamples one = run_sampler(ix, ModelKind::choice, cfg);
  REQUIRE(one.draws[0].size() == 1);
  const DicResult r1 = compute_dic(one, ix);
  CHECK(r1.p_d == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(r1.dic == doctest::Approx(r1.mean_deviance).epsilon(1e-10));
  const double dev = -2.0 * log_likelihood(one.layout.unflatten(one.draws[0][0]), ix,
                                           ModelKind::choice);
  CHECK(r1.mean_deviance == doctest::Approx(dev).epsilon(1e-12));

  // Two known draws: mean deviance and plug-in deviance by hand.
  cfg.iterations = 12;
  PosteriorSamples two = run_sampler(ix, ModelKind::choice, cfg);
  REQUIRE(two.draws[0].size() == 2);
  const double d1 = -2.0 * log_likelihood(two.layout.unflatten(two.draws[0][0]), ix,
                                          ModelKind::choice);
  const double d2 = -2.0 * log_likelihood(two.layout.unflatten(two.draws[0][1]), ix,
                                          ModelKind::choice);
  const DicResult r2 = compute_dic(two, ix);
  CHECK(r2.mean_deviance == doctest::Approx(0.5 * (d1 + d2)).epsilon(1e-10));
  const double dbar = -2.0 * log_likelihood(posterior_mean_state(two), ix,
                                            ModelKind::choice);
  CHECK(r2.p_d == doctest::Approx(r2.mean_deviance - dbar).epsilon(1e-10));
  CHECK(r2.dic == doctest::Approx(r2.mean_deviance + r2.p_d).epsilon(1e-10));
}

TEST_CASE("single-site chain matches quadrature marginals") {
  // Toy two-parameter posterior: one user of the item-independent model with
  // fixed utilities, so only (tau, mu) move. The chain's marginal histogram
  // must match the quadrature-normalized density.
  Dataset d;
  const std::vector<double> times = {0.8, 2.1, 1.5, 3.0, 0.9, 1.7};
  for (std::size_t i = 0; i < times.size(); ++i) {
    d.rows.push_back(obs("p", "u", "x", "y", i % 2 == 0, times[i],
                         static_cast<int>(i + 1)));
  }
  const IndexedData ix = IndexedData::build(d);
  const ModelKind kind = ModelKind::choice;

  ModelState st;
  st.global.mean.tau = 1.0;
  st.global.mean.mu = 1.2;
  st.global.variance = UserState{0.09, 0.09, 0.09, 0.09, 0.09, 0.09};
  st.users.resize(1);
  st.users[0].tau = 1.0;
  st.users[0].mu = 1.2;
  st.utilities = {{0.5, 0.5}};

  auto log_joint = [&](double tau, double mu) {
    return normal_logpdf(tau, 1.0, 0.09) + normal_logpdf(mu, 1.2, 0.09) +
           [&] {
             double s = 0.0;
             for (double t : times) s += hypoexp_logpdf(t, {tau, mu});
             return s;
           }();
  };

  // Piecewise quadrature keeps the adaptive rule from skipping the bump.
  auto inner_mu = [&](double tau) {
    const std::vector<double> cuts = {1e-6, 0.5, 1.0, 1.5, 2.0, 3.0, 4.5};
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      total += testsup::integrate(
          [&](double mu) { return std::exp(log_joint(tau, mu)); }, cuts[i],
          cuts[i + 1], 1e-12);
    }
    return total;
  };

  const double lo = 0.3, hi = 2.1;
  const int bins = 12;
  std::vector<double> bin_mass(bins, 0.0);
  double z = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double a = lo + (hi - lo) * b / bins;
    const double c = lo + (hi - lo) * (b + 1) / bins;
    bin_mass[b] = testsup::integrate(inner_mu, a, c, 1e-9);
    z += bin_mass[b];
  }
  // Tail mass outside [lo, hi].
  const double tail = testsup::integrate(inner_mu, 1e-6, lo, 1e-9) +
                      testsup::integrate(inner_mu, hi, 4.5, 1e-9);
  z += tail;

  SamplerConfig cfg;
  cfg.proposal_sd = 0.25;
  RandomStream rng(12345);
  const int iters = 100000, burn = 1000;
  std::vector<double> counts(bins, 0.0);
  double tail_count = 0.0;
  for (int it = 0; it < iters; ++it) {
    mh_update_user_param(st, ix, kind, 0, UserParamName::tau, cfg, rng);
    mh_update_user_param(st, ix, kind, 0, UserParamName::mu, cfg, rng);
    if (it < burn) continue;
    const double tau = st.users[0].tau;
    if (tau < lo || tau >= hi) {
      tail_count += 1.0;
    } else {
      counts[static_cast<size_t>((tau - lo) / (hi - lo) * bins)] += 1.0;
    }
  }
  const double n = iters - burn;
  double tv = std::abs(tail_count / n - tail / z);
  for (int b = 0; b < bins; ++b) {
    tv += std::abs(counts[b] / n - bin_mass[b] / z);
  }
  tv *= 0.5;
  CHECK(tv < 0.05);
}

TEST_CASE("dispersed initial states stay valid") {
  Dataset d;
  d.rows.push_back(obs("p", "u1", "x", "y", true, 1.0));
  d.rows.push_back(obs("q", "u2", "a", "c", false, 0.4));
  d.rows.push_back(obs("q", "u2", "a", "b", true, 1.1));
  const IndexedData ix = IndexedData::build(d);

  RandomStream r1(1), r2(2);
  for (ModelKind kind : {ModelKind::choice, ModelKind::choice_engagement,
                         ModelKind::choice_engagement_time}) {
    const ModelState s1 = initial_state(ix, kind, r1);
    const ModelState s2 = initial_state(ix, kind, r2);
    CHECK(validate_state(s1, kind));
    CHECK(validate_state(s2, kind));
    // Utilities start uniform.
    CHECK(s1.utilities[0][0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s1.utilities[1][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    // Per-chain dispersion comes from the stream.
    CHECK(s1.users[0].tau != s2.users[0].tau);
  }
}
