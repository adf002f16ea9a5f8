#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cetlib/dataset.hpp"
#include "cetlib/random.hpp"

namespace cet {

// Nested model family fitted to (choice, response time) data:
//   choice:                 utility-share choice, item-independent decision
//                           stage mean mu_u (epsilon pinned to 0)
//   choice_engagement:      adds engagement noise epsilon_u to choices
//   choice_engagement_time: decision stage mean driven by the utility gap
enum class ModelKind { choice, choice_engagement, choice_engagement_time };

std::string to_string(ModelKind kind);
// Accepts "choice", "ce", "cet" and the long names.
std::optional<ModelKind> model_kind_from_string(const std::string& s);

enum class UserParamName { A, tau, rho, epsilon, gamma, mu };
const char* user_param_label(UserParamName p);
// The per-user parameters a kind carries, in sweep order.
const std::vector<UserParamName>& active_user_params(ModelKind kind);

struct UserState {
  double A = 1.0, tau = 1.0, rho = 0.5, epsilon = 0.25, gamma = 1.0, mu = 1.0;
  double& field(UserParamName p);
  double field(UserParamName p) const;
};

// Population means and variances; UserState doubles as the slot container so
// both sides index by UserParamName.
struct GlobalParams {
  UserState mean;
  UserState variance;
};

struct ModelState {
  GlobalParams global;
  std::vector<UserState> users;
  // Per poll, the full utility vector; the last coordinate is 1 minus the
  // free coordinates and every coordinate stays in (0, 1).
  std::vector<std::vector<double>> utilities;
};

struct IndexedTrial {
  int poll = 0, user = 0, item_a = 0, item_b = 0;
  bool chose_a = true;
  double t = 0.0;
};

// Dataset resolved to dense indices; poll, user, and item ids sorted
// lexicographically so the mapping is reproducible.
struct IndexedData {
  std::vector<std::string> poll_ids;
  std::vector<std::string> user_ids;
  std::vector<std::vector<std::string>> item_ids;  // per poll
  std::vector<IndexedTrial> trials;
  std::vector<std::vector<int>> by_user;  // trial indices per user
  std::vector<std::vector<int>> by_poll;  // trial indices per poll

  static IndexedData build(const Dataset& data);
  int n_polls() const { return static_cast<int>(poll_ids.size()); }
  int n_users() const { return static_cast<int>(user_ids.size()); }
};

struct Hyperpriors {
  double mean_prior_variance = 1e4;   // Normal(0, .) on population means
  double variance_prior_shape = 1.0;  // inverse-gamma on population variances
  double variance_prior_scale = 1.0;
};

struct SamplerConfig {
  int chains = 3;
  int iterations = 5000;
  int burn_in = 500;
  int thinning = 1;
  double proposal_sd = 0.02;
  std::uint64_t seed = 0;
  Hyperpriors hyper;
  bool parallel_chains = true;
};

// Flattened parameter order: population means, population variances, user
// parameters (user-major), then all utility coordinates poll by poll.
struct ParameterLayout {
  std::vector<std::string> names;
  std::vector<UserParamName> user_params;
  int n_users = 0;
  std::vector<int> items_per_poll;
  int user_block_offset = 0;
  int utility_block_offset = 0;

  static ParameterLayout build(const IndexedData& data, ModelKind kind);
  int size() const { return static_cast<int>(names.size()); }
  std::vector<double> flatten(const ModelState& st) const;
  ModelState unflatten(const std::vector<double>& v) const;
  int global_mean_index(UserParamName p) const;
  int global_variance_index(UserParamName p) const;
  int user_param_index(UserParamName p, int user) const;
  int utility_index(int poll, int item) const;
};

struct AcceptanceCounter {
  std::int64_t proposed = 0;
  std::int64_t accepted = 0;
  double rate() const { return proposed ? double(accepted) / double(proposed) : 0.0; }
};

struct PosteriorSamples {
  ModelKind kind = ModelKind::choice_engagement_time;
  ParameterLayout layout;
  std::vector<std::vector<std::vector<double>>> draws;  // [chain][sample][param]
  std::vector<std::vector<int>> iterations;             // sweep index of each sample
  std::map<std::string, AcceptanceCounter> acceptance;  // per parameter block
  int n_chains() const { return static_cast<int>(draws.size()); }
};

// Joint log likelihood of the data under a state; -infinity for states that
// violate positivity or the utility simplex (never throws for those).
double log_likelihood(const ModelState& st, const IndexedData& data, ModelKind kind);

bool validate_state(const ModelState& st, ModelKind kind);

// --- single-site updates (exposed for direct testing) ----------------------

struct NormalPosterior {
  double mean = 0.0;
  double variance = 0.0;
};
// Conjugate posterior of a population mean given its users' values and the
// population variance.
NormalPosterior global_mean_posterior(const std::vector<double>& values,
                                      double sigma2_kappa, const Hyperpriors& hyper);
double gibbs_update_global_mean(const std::vector<double>& values, double sigma2_kappa,
                                const Hyperpriors& hyper, RandomStream& rng);

struct InverseGammaPosterior {
  double shape = 0.0;
  double scale = 0.0;
};
InverseGammaPosterior global_variance_posterior(const std::vector<double>& values,
                                                double mean, const Hyperpriors& hyper);
double gibbs_update_global_variance(const std::vector<double>& values, double mean,
                                    const Hyperpriors& hyper, RandomStream& rng);

// Log Metropolis-Hastings ratio for a user-parameter proposal: population
// prior ratio times the user's likelihood ratio. The time stage always
// enters; the choice stage enters only for epsilon (the one parameter that
// moves choice probabilities). Out-of-domain proposals return -infinity
// (epsilon may sit at 0, everything else must stay positive).
double mh_log_acceptance_ratio(const ModelState& st, const IndexedData& data,
                               ModelKind kind, int user, UserParamName param,
                               double proposal);
bool mh_update_user_param(ModelState& st, const IndexedData& data, ModelKind kind,
                          int user, UserParamName param, const SamplerConfig& cfg,
                          RandomStream& rng);

// Same for one free utility coordinate; flat prior on (0, 1), rejected
// outright if the coordinate or the implied last coordinate leaves its range.
// The likelihood ratio runs over every trial of the poll.
double utility_log_acceptance_ratio(const ModelState& st, const IndexedData& data,
                                    ModelKind kind, int poll, int item, double proposal);
bool mh_update_item_utility(ModelState& st, const IndexedData& data, ModelKind kind,
                            int poll, int item, const SamplerConfig& cfg,
                            RandomStream& rng);

// One full systematic sweep: population means, population variances, user
// parameters (users ascending, fixed parameter order), free utilities (polls
// ascending, coordinates ascending).
void sweep_once(ModelState& st, const IndexedData& data, ModelKind kind,
                const SamplerConfig& cfg, RandomStream& rng,
                std::map<std::string, AcceptanceCounter>* acceptance);

ModelState initial_state(const IndexedData& data, ModelKind kind, RandomStream& rng);

// Runs `chains` independent chains (concurrently when configured); chain c
// draws from substream (seed, c+1), so results are bit-identical for a given
// seed regardless of scheduling.
PosteriorSamples run_sampler(const IndexedData& data, ModelKind kind,
                             const SamplerConfig& cfg);

// --- posterior reporting ----------------------------------------------------

struct ParameterSummary {
  double mean = 0.0;
  double median = 0.0;
  double ci5 = 0.0;   // 5th percentile
  double ci95 = 0.0;  // 95th percentile
  double rhat = 1.0;  // split-chain potential scale reduction
};

std::map<std::string, ParameterSummary> summarize(const PosteriorSamples& samples);

// Split-chain potential scale reduction factor; 1 for constant chains.
double split_rhat(const std::vector<std::vector<double>>& chains);

// Componentwise posterior means with each poll's last utility coordinate
// recomputed from the simplex constraint.
ModelState posterior_mean_state(const PosteriorSamples& samples);

struct DicResult {
  double dic = 0.0;
  double mean_deviance = 0.0;  // average of -2 log likelihood over draws
  double p_d = 0.0;            // effective parameter count
};
DicResult compute_dic(const PosteriorSamples& samples, const IndexedData& data);

// Long-format trace export: chain, iteration, parameter, value.
void write_samples_csv(const PosteriorSamples& samples, const std::string& path);

}  // namespace cet
