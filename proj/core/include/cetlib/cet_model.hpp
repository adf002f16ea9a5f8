#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cetlib/dataset.hpp"
#include "cetlib/random.hpp"

namespace cet {

// Per-user behavioral parameters of the choice-engagement-time model.
struct UserParams {
  double A = 1.0;        // decision-time scale
  double tau = 1.0;      // mean latency (first response stage)
  double rho = 0.5;      // baseline decision-rate offset
  double epsilon = 0.0;  // engagement noise, >= 0 (0 = fully engaged)
  double gamma = 1.0;    // discrimination exponent
};

struct ItemUtilities {
  std::string poll_id;
  std::vector<double> w;  // positive; analyses assume the poll sums to 1
};

struct PairPrediction {
  double p = 0.0;      // probability the first item is chosen
  double delta = 0.0;  // mean decision time
  double mu = 0.0;     // mean response time, tau + delta
};

// (w_i/(w_i+w_j) + eps) / (1 + 2 eps): the share of utility blended toward a
// fair coin as engagement noise grows.
double cet_choice_prob(double w_i, double w_j, double epsilon);

// delta = A / (|gap|^(2 gamma) + eps + rho) with gap = (w_i-w_j)/(w_i+w_j).
// Convention: a zero gap contributes 0 even when gamma == 0. Ties with
// eps + rho == 0 have no finite mean and throw.
PairPrediction cet_mean_response_time(double w_i, double w_j, const UserParams& u);

// Pairing an item against the no-purchase option. favor_items adds the noise
// to the item's blended share; favor_no_purchase adds it to the no-purchase
// utility instead. Both return the probability the *item* is chosen.
enum class NoPurchaseMode { favor_items, favor_no_purchase };
double cet_no_purchase_prob(double w_i, double w_0, double epsilon, NoPurchaseMode mode);

// Posterior mean of a Uniform(0,1) win probability after n_first wins out of
// n_total: (n_first + 1) / (n_total + 2).
double bt_posterior_mean(std::int64_t n_first, std::int64_t n_total);

// --- simulation -----------------------------------------------------------

struct TrialPlanEntry {
  int poll = 0;
  int user = 0;
  int item_a = 0;  // index into the poll's utilities
  int item_b = 0;
  int reps = 1;
};

struct SimulatedTrial {
  Observation obs;
  double latency = 0.0;        // latent first stage
  double decision_time = 0.0;  // latent second stage; their sum is obs.response_time
};

// Every unordered pair of every poll, once per user, with `reps` repetitions.
std::vector<TrialPlanEntry> full_trial_plan(const std::vector<ItemUtilities>& polls,
                                            int n_users, int reps);

// Ids used by cet_simulate: "item<k+1>" and "u<k+1>" zero-padded to the width
// of n_users, so lexicographic order matches numeric order.
std::string simulated_item_id(int index);
std::string simulated_user_id(int index, int n_users);

// Draws choices and two-stage response times for the plan. Each user reads
// from an independent substream of `seed`, so outputs do not depend on plan
// order. Ids are generated as the poll's id, "item<k>", and zero-padded
// "u<k>". An empty plan means full_trial_plan(polls, users.size(), 1).
std::vector<SimulatedTrial> cet_simulate(const std::vector<ItemUtilities>& polls,
                                         const std::vector<UserParams>& users,
                                         const std::vector<TrialPlanEntry>& plan,
                                         std::uint64_t seed);

// --- estimator bias under engagement noise --------------------------------

struct EpsilonDist {
  enum class Kind { deterministic, exponential, truncated_normal };
  Kind kind = Kind::deterministic;
  double mean = 0.0;
  double sd = 0.0;  // truncated_normal only
  double sample(RandomStream& rng) const;
};

struct BiasReport {
  double w = 0.0;                   // true normalized utility of the pair
  double engagement_shift = 0.0;    // B = E[eps / (1 + 2 eps)]
  double asymptotic_estimate = 0.0; // w + B (1 - 2 w)
  double finite_n_estimate = 0.0;   // Monte Carlo mean of (N1+1)/(N+2)
  std::int64_t n = 0;
  std::int64_t reps = 0;
};

// Population of n users with iid engagement noise votes once each on a pair
// with normalized utility w; the report compares the smoothed vote-share
// estimator against the noise-shifted asymptote. The shift B is computed
// exactly for deterministic noise and by a 10^6-draw plug-in otherwise.
BiasReport engagement_bias(double w, const EpsilonDist& dist, std::int64_t n,
                           std::int64_t reps, RandomStream& rng);

}  // namespace cet
