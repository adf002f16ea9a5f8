#include "cetlib/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cetlib/distributions.hpp"
#include "cetlib/errors.hpp"
#include "cetlib/io.hpp"
#include "cetlib/stats.hpp"

namespace cet {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::choice: return "choice";
    case ModelKind::choice_engagement: return "choice_engagement";
    case ModelKind::choice_engagement_time: return "choice_engagement_time";
  }
  return "unknown";
}

std::optional<ModelKind> model_kind_from_string(const std::string& s) {
  if (s == "choice") return ModelKind::choice;
  if (s == "ce" || s == "choice_engagement") return ModelKind::choice_engagement;
  if (s == "cet" || s == "choice_engagement_time") return ModelKind::choice_engagement_time;
  return std::nullopt;
}

const char* user_param_label(UserParamName p) {
  switch (p) {
    case UserParamName::A: return "A";
    case UserParamName::tau: return "tau";
    case UserParamName::rho: return "rho";
    case UserParamName::epsilon: return "epsilon";
    case UserParamName::gamma: return "gamma";
    case UserParamName::mu: return "mu";
  }
  return "?";
}

const std::vector<UserParamName>& active_user_params(ModelKind kind) {
  static const std::vector<UserParamName> kChoice{UserParamName::tau, UserParamName::mu};
  static const std::vector<UserParamName> kCe{UserParamName::tau, UserParamName::epsilon,
                                              UserParamName::mu};
  static const std::vector<UserParamName> kCet{UserParamName::A, UserParamName::tau,
                                               UserParamName::rho, UserParamName::epsilon,
                                               UserParamName::gamma};
  switch (kind) {
    case ModelKind::choice: return kChoice;
    case ModelKind::choice_engagement: return kCe;
    case ModelKind::choice_engagement_time: return kCet;
  }
  return kCet;
}

double& UserState::field(UserParamName p) {
  switch (p) {
    case UserParamName::A: return A;
    case UserParamName::tau: return tau;
    case UserParamName::rho: return rho;
    case UserParamName::epsilon: return epsilon;
    case UserParamName::gamma: return gamma;
    case UserParamName::mu: return mu;
  }
  throw std::logic_error("unknown user parameter");
}

double UserState::field(UserParamName p) const {
  return const_cast<UserState*>(this)->field(p);
}

// --- data indexing ----------------------------------------------------------

IndexedData IndexedData::build(const Dataset& data) {
  if (data.rows.empty()) throw ValidationError("dataset has no observations");
  IndexedData d;

  std::map<std::string, int> poll_ix, user_ix;
  for (const auto& o : data.rows) {
    poll_ix.emplace(o.poll_id, 0);
    user_ix.emplace(o.user_id, 0);
  }
  for (auto& [id, ix] : poll_ix) {
    ix = static_cast<int>(d.poll_ids.size());
    d.poll_ids.push_back(id);
  }
  for (auto& [id, ix] : user_ix) {
    ix = static_cast<int>(d.user_ids.size());
    d.user_ids.push_back(id);
  }

  std::vector<std::map<std::string, int>> item_ix(d.poll_ids.size());
  for (const auto& o : data.rows) {
    auto& items = item_ix[poll_ix[o.poll_id]];
    items.emplace(o.item_i, 0);
    items.emplace(o.item_j, 0);
  }
  d.item_ids.resize(d.poll_ids.size());
  for (std::size_t s = 0; s < item_ix.size(); ++s) {
    for (auto& [id, ix] : item_ix[s]) {
      ix = static_cast<int>(d.item_ids[s].size());
      d.item_ids[s].push_back(id);
    }
  }

  d.by_user.resize(d.user_ids.size());
  d.by_poll.resize(d.poll_ids.size());
  d.trials.reserve(data.rows.size());
  for (const auto& o : data.rows) {
    IndexedTrial tr;
    tr.poll = poll_ix[o.poll_id];
    tr.user = user_ix[o.user_id];
    tr.item_a = item_ix[tr.poll][o.item_i];
    tr.item_b = item_ix[tr.poll][o.item_j];
    tr.chose_a = o.chose_i;
    tr.t = o.response_time;
    const int ix = static_cast<int>(d.trials.size());
    d.by_user[tr.user].push_back(ix);
    d.by_poll[tr.poll].push_back(ix);
    d.trials.push_back(tr);
  }
  return d;
}

// --- parameter layout -------------------------------------------------------

ParameterLayout ParameterLayout::build(const IndexedData& data, ModelKind kind) {
  ParameterLayout L;
  L.user_params = active_user_params(kind);
  L.n_users = data.n_users();
  for (const auto& items : data.item_ids)
    L.items_per_poll.push_back(static_cast<int>(items.size()));

  for (auto pn : L.user_params) L.names.emplace_back(user_param_label(pn));
  for (auto pn : L.user_params)
    L.names.push_back(std::string("sigma2_") + user_param_label(pn));
  L.user_block_offset = static_cast<int>(L.names.size());
  for (int u = 0; u < L.n_users; ++u)
    for (auto pn : L.user_params)
      L.names.push_back(std::string(user_param_label(pn)) + "_u[" + data.user_ids[u] + "]");
  L.utility_block_offset = static_cast<int>(L.names.size());
  for (int s = 0; s < data.n_polls(); ++s)
    for (const auto& item : data.item_ids[s])
      L.names.push_back("w[" + data.poll_ids[s] + "][" + item + "]");
  return L;
}

int ParameterLayout::global_mean_index(UserParamName p) const {
  for (std::size_t i = 0; i < user_params.size(); ++i)
    if (user_params[i] == p) return static_cast<int>(i);
  throw std::invalid_argument("parameter not active for this model kind");
}

int ParameterLayout::global_variance_index(UserParamName p) const {
  return static_cast<int>(user_params.size()) + global_mean_index(p);
}

int ParameterLayout::user_param_index(UserParamName p, int user) const {
  if (user < 0 || user >= n_users) throw std::invalid_argument("user index out of range");
  return user_block_offset + user * static_cast<int>(user_params.size()) +
         global_mean_index(p);
}

int ParameterLayout::utility_index(int poll, int item) const {
  if (poll < 0 || poll >= static_cast<int>(items_per_poll.size()))
    throw std::invalid_argument("poll index out of range");
  if (item < 0 || item >= items_per_poll[poll])
    throw std::invalid_argument("item index out of range");
  int off = utility_block_offset;
  for (int s = 0; s < poll; ++s) off += items_per_poll[s];
  return off + item;
}

std::vector<double> ParameterLayout::flatten(const ModelState& st) const {
  std::vector<double> v;
  v.reserve(names.size());
  for (auto pn : user_params) v.push_back(st.global.mean.field(pn));
  for (auto pn : user_params) v.push_back(st.global.variance.field(pn));
  for (const auto& us : st.users)
    for (auto pn : user_params) v.push_back(us.field(pn));
  for (const auto& w : st.utilities) v.insert(v.end(), w.begin(), w.end());
  return v;
}

ModelState ParameterLayout::unflatten(const std::vector<double>& v) const {
  if (static_cast<int>(v.size()) != size())
    throw std::invalid_argument("flattened vector length mismatch");
  ModelState st;
  std::size_t k = 0;
  for (auto pn : user_params) st.global.mean.field(pn) = v[k++];
  for (auto pn : user_params) st.global.variance.field(pn) = v[k++];
  st.users.resize(n_users);
  for (auto& us : st.users) {
    us.epsilon = 0.0;  // inactive slots stay inert
    for (auto pn : user_params) us.field(pn) = v[k++];
  }
  st.utilities.resize(items_per_poll.size());
  for (std::size_t s = 0; s < items_per_poll.size(); ++s) {
    st.utilities[s].assign(v.begin() + k, v.begin() + k + items_per_poll[s]);
    k += items_per_poll[s];
  }
  return st;
}

// --- likelihood -------------------------------------------------------------

namespace {

double decision_mean(const std::vector<double>& w, const UserState& us,
                     const IndexedTrial& tr, ModelKind kind) {
  if (kind != ModelKind::choice_engagement_time) return us.mu;
  const double wa = w[tr.item_a], wb = w[tr.item_b];
  const double gap = (wa - wb) / (wa + wb);
  const double gt = gap == 0.0 ? 0.0 : std::pow(gap * gap, us.gamma);
  return us.A / (gt + us.epsilon + us.rho);
}

double trial_time_logpdf(const std::vector<double>& w, const UserState& us,
                         const IndexedTrial& tr, ModelKind kind) {
  return hypoexp_logpdf(tr.t, {us.tau, decision_mean(w, us, tr, kind)});
}

double trial_choice_logmass(const std::vector<double>& w, const UserState& us,
                            const IndexedTrial& tr, ModelKind kind) {
  const double wa = w[tr.item_a], wb = w[tr.item_b];
  double p = wa / (wa + wb);
  if (kind != ModelKind::choice) p = (p + us.epsilon) / (1.0 + 2.0 * us.epsilon);
  return tr.chose_a ? std::log(p) : std::log1p(-p);
}

double user_loglik(const ModelState& st, const IndexedData& data, ModelKind kind,
                   int user, const UserState& us, bool with_choice) {
  double s = 0.0;
  for (int ti : data.by_user[user]) {
    const auto& tr = data.trials[ti];
    const auto& w = st.utilities[tr.poll];
    s += trial_time_logpdf(w, us, tr, kind);
    if (with_choice) s += trial_choice_logmass(w, us, tr, kind);
  }
  return s;
}

double poll_loglik(const ModelState& st, const IndexedData& data, ModelKind kind,
                   int poll, const std::vector<double>& w) {
  double s = 0.0;
  for (int ti : data.by_poll[poll]) {
    const auto& tr = data.trials[ti];
    const auto& us = st.users[tr.user];
    s += trial_time_logpdf(w, us, tr, kind) + trial_choice_logmass(w, us, tr, kind);
  }
  return s;
}

}  // namespace

bool validate_state(const ModelState& st, ModelKind kind) {
  for (const auto& us : st.users) {
    for (auto pn : active_user_params(kind)) {
      const double v = us.field(pn);
      if (!std::isfinite(v)) return false;
      if (pn == UserParamName::epsilon ? v < 0.0 : v <= 0.0) return false;
    }
  }
  for (auto pn : active_user_params(kind)) {
    if (!std::isfinite(st.global.mean.field(pn))) return false;
    const double s2 = st.global.variance.field(pn);
    if (!std::isfinite(s2) || !(s2 > 0.0)) return false;
  }
  for (const auto& w : st.utilities) {
    if (w.size() < 2) return false;
    double sum = 0.0;
    for (double x : w) {
      if (!std::isfinite(x) || !(x > 0.0) || !(x < 1.0)) return false;
      sum += x;
    }
    if (std::fabs(sum - 1.0) > 1e-9) return false;
  }
  return true;
}

double log_likelihood(const ModelState& st, const IndexedData& data, ModelKind kind) {
  if (st.users.size() != static_cast<std::size_t>(data.n_users()) ||
      st.utilities.size() != static_cast<std::size_t>(data.n_polls()))
    throw std::invalid_argument("state shape does not match data");
  for (int s = 0; s < data.n_polls(); ++s)
    if (st.utilities[s].size() != data.item_ids[s].size())
      throw std::invalid_argument("state shape does not match data");
  if (!validate_state(st, kind)) return kNegInf;
  double sum = 0.0;
  for (const auto& tr : data.trials) {
    const auto& w = st.utilities[tr.poll];
    const auto& us = st.users[tr.user];
    sum += trial_choice_logmass(w, us, tr, kind) + trial_time_logpdf(w, us, tr, kind);
  }
  return sum;
}

// --- conjugate updates ------------------------------------------------------

NormalPosterior global_mean_posterior(const std::vector<double>& values,
                                      double sigma2_kappa, const Hyperpriors& hyper) {
  if (values.empty()) throw std::domain_error("global mean update: no values");
  if (!(sigma2_kappa > 0.0) || !(hyper.mean_prior_variance > 0.0))
    throw std::domain_error("global mean update: variances must be positive");
  const double m = static_cast<double>(values.size());
  const double kbar = mean_of(values);
  NormalPosterior post;
  // Normal(0, s2_0) prior, Normal(kappa, s2_k) likelihood per user value:
  // precision-weighted shrinkage of the sample mean toward 0.
  post.mean = kbar / (1.0 + sigma2_kappa / (m * hyper.mean_prior_variance));
  post.variance = sigma2_kappa / (m + sigma2_kappa / hyper.mean_prior_variance);
  return post;
}

double gibbs_update_global_mean(const std::vector<double>& values, double sigma2_kappa,
                                const Hyperpriors& hyper, RandomStream& rng) {
  const NormalPosterior post = global_mean_posterior(values, sigma2_kappa, hyper);
  return rng.normal(post.mean, std::sqrt(post.variance));
}

InverseGammaPosterior global_variance_posterior(const std::vector<double>& values,
                                                double mean, const Hyperpriors& hyper) {
  if (values.empty()) throw std::domain_error("global variance update: no values");
  if (!(hyper.variance_prior_shape > 0.0) || !(hyper.variance_prior_scale > 0.0))
    throw std::domain_error("global variance update: hyperprior must be positive");
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {hyper.variance_prior_shape + 0.5 * static_cast<double>(values.size()),
          hyper.variance_prior_scale + 0.5 * ss};
}

double gibbs_update_global_variance(const std::vector<double>& values, double mean,
                                    const Hyperpriors& hyper, RandomStream& rng) {
  const InverseGammaPosterior post = global_variance_posterior(values, mean, hyper);
  return rng.inverse_gamma(post.shape, post.scale);
}

// --- Metropolis-Hastings updates ---------------------------------------------

double mh_log_acceptance_ratio(const ModelState& st, const IndexedData& data,
                               ModelKind kind, int user, UserParamName param,
                               double proposal) {
  if (user < 0 || user >= static_cast<int>(st.users.size()))
    throw std::invalid_argument("user index out of range");
  const auto& active = active_user_params(kind);
  if (std::find(active.begin(), active.end(), param) == active.end())
    throw std::invalid_argument("parameter not active for this model kind");

  const bool is_eps = param == UserParamName::epsilon;
  if (is_eps ? proposal < 0.0 : proposal <= 0.0) return kNegInf;

  const double cur = st.users[user].field(param);
  const double m = st.global.mean.field(param);
  const double s2 = st.global.variance.field(param);
  double lr = normal_logpdf(proposal, m, s2) - normal_logpdf(cur, m, s2);

  // epsilon shifts choice probabilities; every parameter shifts the time
  // stage, so the time factor is always part of the ratio.
  UserState alt = st.users[user];
  alt.field(param) = proposal;
  lr += user_loglik(st, data, kind, user, alt, is_eps) -
        user_loglik(st, data, kind, user, st.users[user], is_eps);
  return lr;
}

bool mh_update_user_param(ModelState& st, const IndexedData& data, ModelKind kind,
                          int user, UserParamName param, const SamplerConfig& cfg,
                          RandomStream& rng) {
  const double cur = st.users[user].field(param);
  const double proposal = rng.normal(cur, cfg.proposal_sd);
  const double lr = mh_log_acceptance_ratio(st, data, kind, user, param, proposal);
  const bool accept = std::log(rng.uniform()) < lr;
  if (accept) st.users[user].field(param) = proposal;
  return accept;
}

double utility_log_acceptance_ratio(const ModelState& st, const IndexedData& data,
                                    ModelKind kind, int poll, int item, double proposal) {
  if (poll < 0 || poll >= static_cast<int>(st.utilities.size()))
    throw std::invalid_argument("poll index out of range");
  const auto& w = st.utilities[poll];
  const int m = static_cast<int>(w.size());
  if (item < 0 || item >= m - 1)
    throw std::invalid_argument("only free utility coordinates can be updated");

  if (!(proposal > 0.0) || !(proposal < 1.0)) return kNegInf;
  const double last_new = w[m - 1] + w[item] - proposal;
  if (!(last_new > 0.0)) return kNegInf;

  std::vector<double> wn = w;
  wn[item] = proposal;
  wn[m - 1] = last_new;
  // Flat prior on the free coordinate; unaffected trials cancel exactly, so
  // summing over the whole poll is the same ratio.
  return poll_loglik(st, data, kind, poll, wn) - poll_loglik(st, data, kind, poll, w);
}

bool mh_update_item_utility(ModelState& st, const IndexedData& data, ModelKind kind,
                            int poll, int item, const SamplerConfig& cfg,
                            RandomStream& rng) {
  auto& w = st.utilities[poll];
  const int m = static_cast<int>(w.size());
  const double proposal = rng.normal(w[item], cfg.proposal_sd);
  const double lr = utility_log_acceptance_ratio(st, data, kind, poll, item, proposal);
  const bool accept = std::log(rng.uniform()) < lr;
  if (accept) {
    w[m - 1] += w[item] - proposal;
    w[item] = proposal;
  }
  return accept;
}

// --- sweep and driver --------------------------------------------------------

void sweep_once(ModelState& st, const IndexedData& data, ModelKind kind,
                const SamplerConfig& cfg, RandomStream& rng,
                std::map<std::string, AcceptanceCounter>* acceptance) {
  const auto& active = active_user_params(kind);
  const int n_users = data.n_users();
  std::vector<double> values(n_users);

  for (auto pn : active) {
    for (int u = 0; u < n_users; ++u) values[u] = st.users[u].field(pn);
    st.global.mean.field(pn) =
        gibbs_update_global_mean(values, st.global.variance.field(pn), cfg.hyper, rng);
  }
  for (auto pn : active) {
    for (int u = 0; u < n_users; ++u) values[u] = st.users[u].field(pn);
    st.global.variance.field(pn) =
        gibbs_update_global_variance(values, st.global.mean.field(pn), cfg.hyper, rng);
  }
  for (int u = 0; u < n_users; ++u) {
    for (auto pn : active) {
      const bool ok = mh_update_user_param(st, data, kind, u, pn, cfg, rng);
      if (acceptance) {
        auto& c = (*acceptance)[std::string(user_param_label(pn)) + "_u"];
        ++c.proposed;
        c.accepted += ok ? 1 : 0;
      }
    }
  }
  for (int s = 0; s < data.n_polls(); ++s) {
    const int m = static_cast<int>(st.utilities[s].size());
    for (int i = 0; i + 1 < m; ++i) {
      const bool ok = mh_update_item_utility(st, data, kind, s, i, cfg, rng);
      if (acceptance) {
        auto& c = (*acceptance)["w"];
        ++c.proposed;
        c.accepted += ok ? 1 : 0;
      }
    }
  }
}

ModelState initial_state(const IndexedData& data, ModelKind kind, RandomStream& rng) {
  // Dispersion anchors for the per-user draws; population slots start at the
  // anchors too and are resampled in the first sweep.
  UserState anchor;
  anchor.A = 1.0;
  anchor.tau = 1.0;
  anchor.rho = 0.5;
  anchor.epsilon = 0.25;
  anchor.gamma = 1.0;
  anchor.mu = 1.0;

  ModelState st;
  st.global.mean = anchor;
  for (auto pn : {UserParamName::A, UserParamName::tau, UserParamName::rho,
                  UserParamName::epsilon, UserParamName::gamma, UserParamName::mu})
    st.global.variance.field(pn) = 0.0625;

  st.users.resize(data.n_users());
  for (auto& us : st.users) {
    us.epsilon = 0.0;  // stays pinned when the kind has no engagement noise
    for (auto pn : active_user_params(kind))
      us.field(pn) = rng.truncated_positive_normal(anchor.field(pn), 0.25);
  }

  st.utilities.resize(data.n_polls());
  for (int s = 0; s < data.n_polls(); ++s) {
    const int m = static_cast<int>(data.item_ids[s].size());
    st.utilities[s].assign(m, 1.0 / m);
  }
  return st;
}

PosteriorSamples run_sampler(const IndexedData& data, ModelKind kind,
                             const SamplerConfig& cfg) {
  if (cfg.chains < 1) throw ValidationError("sampler: chains must be >= 1");
  if (cfg.iterations < 1) throw ValidationError("sampler: iterations must be >= 1");
  if (cfg.burn_in < 0 || cfg.burn_in >= cfg.iterations)
    throw ValidationError("sampler: burn-in must satisfy 0 <= burn_in < iterations");
  if (cfg.thinning < 1) throw ValidationError("sampler: thinning must be >= 1");
  if (!(cfg.proposal_sd > 0.0)) throw ValidationError("sampler: proposal sd must be positive");
  if (data.trials.empty()) throw ValidationError("sampler: dataset has no observations");

  PosteriorSamples out;
  out.kind = kind;
  out.layout = ParameterLayout::build(data, kind);
  out.draws.resize(cfg.chains);
  out.iterations.resize(cfg.chains);

  std::vector<std::map<std::string, AcceptanceCounter>> chain_acc(cfg.chains);
  std::vector<std::exception_ptr> errors(cfg.chains);

  auto run_chain = [&](int c) {
    try {
      RandomStream rng = RandomStream::derive(cfg.seed, static_cast<std::uint64_t>(c) + 1);
      ModelState st = initial_state(data, kind, rng);
      for (int it = 1; it <= cfg.iterations; ++it) {
        sweep_once(st, data, kind, cfg, rng, &chain_acc[c]);
        if (it > cfg.burn_in && (it - cfg.burn_in - 1) % cfg.thinning == 0) {
          out.draws[c].push_back(out.layout.flatten(st));
          out.iterations[c].push_back(it);
        }
      }
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };

  if (cfg.parallel_chains && cfg.chains > 1) {
    std::vector<std::thread> threads;
    threads.reserve(cfg.chains);
    for (int c = 0; c < cfg.chains; ++c) threads.emplace_back(run_chain, c);
    for (auto& t : threads) t.join();
  } else {
    for (int c = 0; c < cfg.chains; ++c) run_chain(c);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (const auto& acc : chain_acc) {
    for (const auto& [key, counter] : acc) {
      out.acceptance[key].proposed += counter.proposed;
      out.acceptance[key].accepted += counter.accepted;
    }
  }
  return out;
}

// --- posterior reporting ------------------------------------------------------

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const int n2 = static_cast<int>(c.size()) / 2;
    if (n2 < 2) return std::numeric_limits<double>::quiet_NaN();
    halves.emplace_back(c.begin(), c.begin() + n2);
    halves.emplace_back(c.end() - n2, c.end());
  }
  const double n = static_cast<double>(halves.front().size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : halves) {
    means.push_back(mean_of(h));
    w += variance_of(h);
  }
  w /= static_cast<double>(halves.size());
  const double b = n * variance_of(means);
  if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

std::map<std::string, ParameterSummary> summarize(const PosteriorSamples& samples) {
  if (samples.draws.empty() || samples.draws.front().empty())
    throw ValidationError("summarize: no retained samples");
  const int n_params = samples.layout.size();
  std::map<std::string, ParameterSummary> out;
  std::vector<double> pooled;
  std::vector<std::vector<double>> per_chain(samples.draws.size());
  for (int j = 0; j < n_params; ++j) {
    pooled.clear();
    for (std::size_t c = 0; c < samples.draws.size(); ++c) {
      per_chain[c].clear();
      for (const auto& draw : samples.draws[c]) {
        per_chain[c].push_back(draw[j]);
        pooled.push_back(draw[j]);
      }
    }
    std::sort(pooled.begin(), pooled.end());
    ParameterSummary s;
    s.mean = mean_of(pooled);
    s.median = quantile_sorted(pooled, 0.5);
    s.ci5 = quantile_sorted(pooled, 0.05);
    s.ci95 = quantile_sorted(pooled, 0.95);
    s.rhat = split_rhat(per_chain);
    out.emplace(samples.layout.names[j], s);
  }
  return out;
}

ModelState posterior_mean_state(const PosteriorSamples& samples) {
  if (samples.draws.empty() || samples.draws.front().empty())
    throw ValidationError("posterior_mean_state: no retained samples");
  const int n_params = samples.layout.size();
  std::vector<double> acc(n_params, 0.0);
  std::int64_t n = 0;
  for (const auto& chain : samples.draws) {
    for (const auto& draw : chain) {
      for (int j = 0; j < n_params; ++j) acc[j] += draw[j];
      ++n;
    }
  }
  for (double& v : acc) v /= static_cast<double>(n);
  ModelState st = samples.layout.unflatten(acc);
  // Means of free coordinates do not sum with the mean of the last one, so
  // re-derive the last coordinate from the simplex.
  for (auto& w : st.utilities) {
    double free_sum = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) free_sum += w[i];
    w.back() = 1.0 - free_sum;
    if (!(w.back() > 0.0))
      throw NumericalError("posterior_mean_state: degenerate mean utilities");
  }
  return st;
}

DicResult compute_dic(const PosteriorSamples& samples, const IndexedData& data) {
  if (samples.draws.empty() || samples.draws.front().empty())
    throw ValidationError("compute_dic: no retained samples");
  double acc = 0.0;
  std::int64_t n = 0;
  for (const auto& chain : samples.draws) {
    for (const auto& draw : chain) {
      acc += log_likelihood(samples.layout.unflatten(draw), data, samples.kind);
      ++n;
    }
  }
  DicResult r;
  r.mean_deviance = -2.0 * acc / static_cast<double>(n);
  const double d_hat = -2.0 * log_likelihood(posterior_mean_state(samples), data, samples.kind);
  r.p_d = r.mean_deviance - d_hat;
  r.dic = r.mean_deviance + r.p_d;
  return r;
}

void write_samples_csv(const PosteriorSamples& samples, const std::string& path) {
  atomic_write_stream(path, [&](std::ostream& out) {
    out << "chain,iteration,parameter,value\n";
    char buf[64];
    for (std::size_t c = 0; c < samples.draws.size(); ++c) {
      for (std::size_t k = 0; k < samples.draws[c].size(); ++k) {
        const auto& draw = samples.draws[c][k];
        for (std::size_t j = 0; j < draw.size(); ++j) {
          std::snprintf(buf, sizeof buf, "%.17g", draw[j]);
          out << (c + 1) << ',' << samples.iterations[c][k] << ','
              << samples.layout.names[j] << ',' << buf << '\n';
        }
      }
    }
  });
}

}  // namespace cet
