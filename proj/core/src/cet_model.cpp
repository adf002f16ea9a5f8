#include "cetlib/cet_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cetlib/errors.hpp"

namespace cet {

namespace {

void check_user(const UserParams& u) {
  if (!(u.A > 0.0)) throw ValidationError("user params: A must be positive");
  if (!(u.tau > 0.0)) throw ValidationError("user params: tau must be positive");
  if (!(u.rho >= 0.0)) throw ValidationError("user params: rho must be nonnegative");
  if (!(u.epsilon >= 0.0)) throw ValidationError("user params: epsilon must be nonnegative");
  if (!(u.gamma >= 0.0)) throw ValidationError("user params: gamma must be nonnegative");
}

void check_pair(double w_i, double w_j) {
  if (!(w_i >= 0.0) || !(w_j >= 0.0))
    throw ValidationError("utilities must be nonnegative");
  if (!(w_i + w_j > 0.0))
    throw ValidationError("degenerate pair: both utilities are zero");
}

// |gap|^(2 gamma) with the 0^0 := 0 convention for tied utilities.
double gap_term(double gap, double gamma) {
  if (gap == 0.0) return 0.0;
  return std::pow(gap * gap, gamma);
}

}  // namespace

double cet_choice_prob(double w_i, double w_j, double epsilon) {
  check_pair(w_i, w_j);
  if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be nonnegative");
  // Evaluated in canonical orientation so p(i,j) + p(j,i) == 1 exactly; a tie
  // is exactly 1/2 for every epsilon.
  if (w_i == w_j) return 0.5;
  if (w_i < w_j)
    return 1.0 - (w_j / (w_i + w_j) + epsilon) / (1.0 + 2.0 * epsilon);
  return (w_i / (w_i + w_j) + epsilon) / (1.0 + 2.0 * epsilon);
}

PairPrediction cet_mean_response_time(double w_i, double w_j, const UserParams& u) {
  check_pair(w_i, w_j);
  check_user(u);
  const double gap = (w_i - w_j) / (w_i + w_j);
  const double den = gap_term(gap, u.gamma) + u.epsilon + u.rho;
  if (!(den > 0.0))
    throw NumericalError(
        "unbounded mean decision time: tied utilities with epsilon + rho == 0");
  PairPrediction out;
  out.p = cet_choice_prob(w_i, w_j, u.epsilon);
  out.delta = u.A / den;
  out.mu = u.tau + out.delta;
  return out;
}

double cet_no_purchase_prob(double w_i, double w_0, double epsilon, NoPurchaseMode mode) {
  check_pair(w_i, w_0);
  if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be nonnegative");
  const double share = w_i / (w_i + w_0);
  if (mode == NoPurchaseMode::favor_items) return (share + epsilon) / (1.0 + epsilon);
  // Noise inflates the no-purchase utility only.
  return share / (1.0 + epsilon);
}

double bt_posterior_mean(std::int64_t n_first, std::int64_t n_total) {
  if (n_first < 0 || n_total < 0 || n_first > n_total)
    throw ValidationError("bt_posterior_mean: requires 0 <= n_first <= n_total");
  return static_cast<double>(n_first + 1) / static_cast<double>(n_total + 2);
}

std::vector<TrialPlanEntry> full_trial_plan(const std::vector<ItemUtilities>& polls,
                                            int n_users, int reps) {
  if (reps < 1) throw ValidationError("trial plan: reps must be >= 1");
  std::vector<TrialPlanEntry> plan;
  for (int s = 0; s < static_cast<int>(polls.size()); ++s) {
    const int m = static_cast<int>(polls[s].w.size());
    for (int u = 0; u < n_users; ++u)
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) plan.push_back({s, u, i, j, reps});
  }
  return plan;
}

std::string simulated_item_id(int index) { return "item" + std::to_string(index + 1); }

std::string simulated_user_id(int index, int n_users) {
  int width = 1;
  for (int v = n_users; v >= 10; v /= 10) ++width;
  std::string digits = std::to_string(index + 1);
  return "u" + std::string(width - digits.size(), '0') + digits;
}

std::vector<SimulatedTrial> cet_simulate(const std::vector<ItemUtilities>& polls,
                                         const std::vector<UserParams>& users,
                                         const std::vector<TrialPlanEntry>& plan_in,
                                         std::uint64_t seed) {
  if (polls.empty()) throw ValidationError("cet_simulate: no polls");
  if (users.empty()) throw ValidationError("cet_simulate: no users");
  for (const auto& poll : polls) {
    if (poll.w.size() < 2) throw ValidationError("cet_simulate: polls need >= 2 items");
    for (double w : poll.w)
      if (!(w > 0.0)) throw ValidationError("cet_simulate: utilities must be positive");
  }
  for (const auto& u : users) check_user(u);

  std::vector<TrialPlanEntry> plan =
      plan_in.empty() ? full_trial_plan(polls, static_cast<int>(users.size()), 1) : plan_in;
  for (const auto& e : plan) {
    if (e.poll < 0 || e.poll >= static_cast<int>(polls.size()) || e.user < 0 ||
        e.user >= static_cast<int>(users.size()) || e.reps < 1)
      throw ValidationError("cet_simulate: plan entry out of range");
    const int m = static_cast<int>(polls[e.poll].w.size());
    if (e.item_a < 0 || e.item_a >= m || e.item_b < 0 || e.item_b >= m ||
        e.item_a == e.item_b)
      throw ValidationError("cet_simulate: plan pair out of range");
  }

  // Stable order (poll, user, pair, rep); per-user substreams make the draws
  // independent of how the plan interleaves users.
  std::stable_sort(plan.begin(), plan.end(), [](const TrialPlanEntry& x, const TrialPlanEntry& y) {
    if (x.user != y.user) return x.user < y.user;
    if (x.poll != y.poll) return x.poll < y.poll;
    if (x.item_a != y.item_a) return x.item_a < y.item_a;
    return x.item_b < y.item_b;
  });

  const int n_users = static_cast<int>(users.size());
  std::vector<SimulatedTrial> out;
  RandomStream rng(0);
  int stream_user = -1;
  for (const auto& e : plan) {
    if (e.user != stream_user) {
      rng = RandomStream::derive(seed, static_cast<std::uint64_t>(e.user) + 1);
      stream_user = e.user;
    }
    const auto& poll = polls[e.poll];
    const auto& up = users[e.user];
    const PairPrediction pred =
        cet_mean_response_time(poll.w[e.item_a], poll.w[e.item_b], up);
    for (int k = 1; k <= e.reps; ++k) {
      SimulatedTrial tr;
      tr.latency = rng.exponential(up.tau);
      tr.decision_time = rng.exponential(pred.delta);
      tr.obs.poll_id = poll.poll_id;
      tr.obs.user_id = simulated_user_id(e.user, n_users);
      tr.obs.item_i = simulated_item_id(e.item_a);
      tr.obs.item_j = simulated_item_id(e.item_b);
      tr.obs.chose_i = rng.bernoulli(pred.p);
      tr.obs.response_time = tr.latency + tr.decision_time;
      tr.obs.trial_k = k;
      out.push_back(std::move(tr));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const SimulatedTrial& x, const SimulatedTrial& y) {
    if (x.obs.poll_id != y.obs.poll_id) return x.obs.poll_id < y.obs.poll_id;
    if (x.obs.user_id != y.obs.user_id) return x.obs.user_id < y.obs.user_id;
    if (x.obs.item_i != y.obs.item_i) return x.obs.item_i < y.obs.item_i;
    if (x.obs.item_j != y.obs.item_j) return x.obs.item_j < y.obs.item_j;
    return x.obs.trial_k < y.obs.trial_k;
  });
  return out;
}

double EpsilonDist::sample(RandomStream& rng) const {
  switch (kind) {
    case Kind::deterministic:
      if (!(mean >= 0.0)) throw ValidationError("epsilon dist: mean must be nonnegative");
      return mean;
    case Kind::exponential:
      return rng.exponential(mean);
    case Kind::truncated_normal:
      return rng.truncated_positive_normal(mean, sd);
  }
  throw std::logic_error("epsilon dist: unknown kind");
}

BiasReport engagement_bias(double w, const EpsilonDist& dist, std::int64_t n,
                           std::int64_t reps, RandomStream& rng) {
  if (!(w >= 0.0) || !(w <= 1.0))
    throw ValidationError("engagement_bias: w must lie in [0, 1]");
  if (n < 1 || reps < 1)
    throw ValidationError("engagement_bias: n and reps must be >= 1");

  BiasReport r;
  r.w = w;
  r.n = n;
  r.reps = reps;
  if (dist.kind == EpsilonDist::Kind::deterministic) {
    r.engagement_shift = dist.mean / (1.0 + 2.0 * dist.mean);
  } else {
    constexpr std::int64_t kShiftDraws = 1000000;
    double s = 0.0;
    for (std::int64_t i = 0; i < kShiftDraws; ++i) {
      const double e = dist.sample(rng);
      s += e / (1.0 + 2.0 * e);
    }
    r.engagement_shift = s / kShiftDraws;
  }
  r.asymptotic_estimate = w + r.engagement_shift * (1.0 - 2.0 * w);

  double acc = 0.0;
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    std::int64_t n1 = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double e = dist.sample(rng);
      n1 += rng.bernoulli((w + e) / (1.0 + 2.0 * e)) ? 1 : 0;
    }
    acc += static_cast<double>(n1 + 1) / static_cast<double>(n + 2);
  }
  r.finite_n_estimate = acc / reps;
  return r;
}

}  // namespace cet
