#include "cetlib/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "cetlib/distributions.hpp"
#include "cetlib/errors.hpp"
#include "cetlib/random.hpp"
#include "cetlib/stats.hpp"

namespace cet {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct PairAccum {
  std::vector<double> rt_i;  // trials won by the canonical first item
  std::vector<double> rt_j;
};

// Canonical key: (poll, smaller item id, larger item id).
std::map<std::tuple<std::string, std::string, std::string>, PairAccum> group_pairs(
    const Dataset& data) {
  std::map<std::tuple<std::string, std::string, std::string>, PairAccum> groups;
  for (const auto& o : data.rows) {
    const bool flip = o.item_j < o.item_i;
    const std::string& a = flip ? o.item_j : o.item_i;
    const std::string& b = flip ? o.item_i : o.item_j;
    const bool chose_a = flip ? !o.chose_i : o.chose_i;
    auto& g = groups[{o.poll_id, a, b}];
    (chose_a ? g.rt_i : g.rt_j).push_back(o.response_time);
  }
  return groups;
}
}  // namespace

std::vector<PairSummary> pair_summaries(const Dataset& data) {
  if (data.rows.empty()) throw ValidationError("pair_summaries: empty dataset");
  std::vector<PairSummary> out;
  for (const auto& [key, g] : group_pairs(data)) {
    PairSummary s;
    std::tie(s.poll_id, s.item_i, s.item_j) = key;
    s.n_i = static_cast<int>(g.rt_i.size());
    s.n_j = static_cast<int>(g.rt_j.size());
    s.n_trials = s.n_i + s.n_j;
    s.frac_i_chosen = static_cast<double>(s.n_i) / s.n_trials;
    s.choice_fraction = std::min(s.frac_i_chosen, 1.0 - s.frac_i_chosen);
    double total = 0.0;
    for (double t : g.rt_i) total += t;
    for (double t : g.rt_j) total += t;
    s.mean_rt = total / s.n_trials;
    s.mean_rt_given_i = g.rt_i.empty() ? kNaN : mean_of(g.rt_i);
    s.mean_rt_given_j = g.rt_j.empty() ? kNaN : mean_of(g.rt_j);
    out.push_back(std::move(s));
  }
  return out;
}

CorrelationResult pearson_correlation(const std::vector<double>& x,
                                      const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  const int n = static_cast<int>(x.size());
  if (n < 2) throw NumericalError("pearson: need at least 2 points");

  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }

  CorrelationResult res;
  res.n = n;
  if (sxx == 0.0 || syy == 0.0) {
    res.degenerate = true;
    res.r = kNaN;
    res.p_value = kNaN;
    return res;
  }
  res.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double r2 = res.r * res.r;
  if (r2 >= 1.0) {
    res.p_value = 0.0;
    return res;
  }
  // t = r sqrt(nu / (1 - r^2)); two-sided tail expressed through the
  // incomplete beta so no t-distribution table is needed.
  const double nu = static_cast<double>(n - 2);
  const double t2 = nu * r2 / (1.0 - r2);
  res.p_value = reg_inc_beta(nu / (nu + t2), nu / 2.0, 0.5);
  return res;
}

PopulationStats population_stats(const Dataset& data) {
  const auto pairs = pair_summaries(data);
  if (pairs.size() < 2)
    throw NumericalError("population_stats: correlation undefined with fewer than 2 pairs");

  PopulationStats st;
  st.n_pairs = static_cast<int>(pairs.size());
  std::vector<double> fracs, rts;
  for (const auto& p : pairs) {
    fracs.push_back(p.choice_fraction);
    rts.push_back(p.mean_rt);
  }
  st.mean_choice_fraction = mean_of(fracs);
  double total = 0.0;
  for (const auto& o : data.rows) total += o.response_time;
  st.mean_rt = total / static_cast<double>(data.rows.size());
  st.fraction_rt_correlation = pearson_correlation(fracs, rts);
  return st;
}

RankSumStat mann_whitney(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::domain_error("mann_whitney: empty sample");
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

  struct Entry {
    double v;
    bool first;
  };
  std::vector<Entry> all;
  all.reserve(n);
  for (double v : a) all.push_back({v, true});
  for (double v : b) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Entry& l, const Entry& r) { return l.v < r.v; });

  // Average ranks across ties; accumulate the tie correction sum(t^3 - t).
  double rank_sum_a = 0.0, tie_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && all[j].v == all[i].v) ++j;
    const double t = static_cast<double>(j - i);
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (all[k].first) rank_sum_a += avg_rank;
    tie_sum += t * t * t - t;
    i = j;
  }

  RankSumStat res;
  res.u = rank_sum_a - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
  const double mu = 0.5 * static_cast<double>(n1) * static_cast<double>(n2);
  const double nn = static_cast<double>(n);
  const double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
                     ((nn + 1.0) - tie_sum / (nn * (nn - 1.0)));
  if (var <= 0.0) {
    res.p = 1.0;  // every observation tied
    return res;
  }
  const double z = std::max(0.0, std::fabs(res.u - mu) - 0.5) / std::sqrt(var);
  res.p = std::erfc(z / std::sqrt(2.0));
  return res;
}

std::vector<TestResult> conditional_rt_test(const Dataset& data, double alpha,
                                            int min_votes_per_side) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("conditional_rt_test: alpha must be in (0, 1)");
  if (min_votes_per_side < 1)
    throw ValidationError("conditional_rt_test: min_votes_per_side must be >= 1");

  const auto groups = group_pairs(data);
  std::vector<TestResult> out;
  for (const auto& [key, g] : groups) {
    if (static_cast<int>(g.rt_i.size()) < min_votes_per_side ||
        static_cast<int>(g.rt_j.size()) < min_votes_per_side)
      continue;
    TestResult r;
    std::tie(r.poll_id, r.item_i, r.item_j) = key;
    r.n_i = static_cast<int>(g.rt_i.size());
    r.n_j = static_cast<int>(g.rt_j.size());
    const RankSumStat st = mann_whitney(g.rt_i, g.rt_j);
    r.u_statistic = st.u;
    r.p_value = st.p;
    out.push_back(std::move(r));
  }
  if (out.empty()) return out;
  const double threshold = alpha / static_cast<double>(out.size());
  for (auto& r : out) {
    r.bonferroni_threshold = threshold;
    r.reject = r.p_value < threshold;
  }
  return out;
}

double utility_entropy(const std::vector<double>& w) {
  if (w.empty()) throw std::domain_error("utility_entropy: empty vector");
  double sum = 0.0, h = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::domain_error("utility_entropy: coordinates must be in [0, 1]");
    sum += v;
    if (v > 0.0) h -= v * std::log(v);
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw std::domain_error("utility_entropy: coordinates must sum to 1");
  return h;
}

std::map<std::string, std::vector<double>> user_feature_matrix(
    const std::map<std::string, double>& parameter_means,
    const std::vector<std::string>& feature_labels) {
  if (feature_labels.empty())
    throw ValidationError("feature matrix: no features requested");

  std::map<std::string, std::vector<double>> features;
  const std::string& first = feature_labels.front();
  const std::string prefix0 = first + "_u[";
  for (const auto& [name, value] : parameter_means) {
    if (name.rfind(prefix0, 0) != 0 || name.back() != ']') continue;
    const std::string user = name.substr(prefix0.size(), name.size() - prefix0.size() - 1);
    features[user].push_back(value);
  }
  if (features.empty())
    throw ValidationError("feature matrix: no per-user means found for \"" + first + "\"");

  for (std::size_t f = 1; f < feature_labels.size(); ++f) {
    for (auto& [user, vec] : features) {
      const std::string key = feature_labels[f] + "_u[" + user + "]";
      auto it = parameter_means.find(key);
      if (it == parameter_means.end())
        throw ValidationError("feature matrix: missing parameter \"" + key + "\"");
      vec.push_back(it->second);
    }
  }
  standardize_columns(features);
  return features;
}

void standardize_columns(std::map<std::string, std::vector<double>>& features) {
  if (features.empty()) return;
  const std::size_t dim = features.begin()->second.size();
  for (const auto& [user, vec] : features)
    if (vec.size() != dim)
      throw ValidationError("feature matrix: inconsistent dimensions");

  for (std::size_t c = 0; c < dim; ++c) {
    std::vector<double> col;
    col.reserve(features.size());
    for (const auto& [user, vec] : features) col.push_back(vec[c]);
    const double m = mean_of(col);
    const double sd = std::sqrt(variance_of(col));
    for (auto& [user, vec] : features)
      vec[c] = sd > 0.0 ? (vec[c] - m) / sd : 0.0;
  }
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

struct KmeansRun {
  std::vector<int> assign;  // 0-based
  std::vector<std::vector<double>> centroids;
  double wcss = 0.0;
};

KmeansRun kmeans_once(const std::vector<std::vector<double>>& pts, int k,
                      RandomStream& rng) {
  const int n = static_cast<int>(pts.size());
  const std::size_t dim = pts.front().size();

  // k-means++ seeding.
  std::vector<std::vector<double>> centroids;
  centroids.push_back(pts[static_cast<int>(rng.uniform_index(n))]);
  std::vector<double> d2(n);
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = sq_dist(pts[i], centroids[0]);
      for (std::size_t c = 1; c < centroids.size(); ++c)
        best = std::min(best, sq_dist(pts[i], centroids[c]));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      // All points coincide with existing centroids; top up arbitrarily.
      centroids.push_back(pts[static_cast<int>(rng.uniform_index(n))]);
      continue;
    }
    double target = rng.uniform() * total;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      target -= d2[i];
      if (target <= 0.0) {
        pick = i;
        break;
      }
    }
    centroids.push_back(pts[pick]);
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(pts[i], centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double d = sq_dist(pts[i], centroids[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t d = 0; d < dim; ++d) sums[assign[i]][d] += pts[i][d];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Reseed an empty cluster at the point farthest from its centroid.
        int far = 0;
        double fd = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = sq_dist(pts[i], centroids[assign[i]]);
          if (d > fd) {
            fd = d;
            far = i;
          }
        }
        centroids[c] = pts[far];
        changed = true;
      } else {
        for (std::size_t d = 0; d < dim; ++d) centroids[c][d] = sums[c][d] / counts[c];
      }
    }
    if (!changed) break;
  }

  KmeansRun run;
  run.assign = std::move(assign);
  run.centroids = std::move(centroids);
  for (int i = 0; i < n; ++i) run.wcss += sq_dist(pts[i], run.centroids[run.assign[i]]);
  return run;
}

}  // namespace

ClusterResult cluster_users(const std::map<std::string, std::vector<double>>& features,
                            int k, const std::optional<std::map<std::string, int>>& labels,
                            int restarts, std::uint64_t seed) {
  if (k < 2) throw ValidationError("cluster_users: k must be >= 2");
  if (restarts < 1) throw ValidationError("cluster_users: restarts must be >= 1");
  if (features.size() < 2) throw ValidationError("cluster_users: need at least 2 users");

  std::vector<std::string> users;
  std::vector<std::vector<double>> pts;
  const std::size_t dim = features.begin()->second.size();
  if (dim == 0) throw ValidationError("cluster_users: zero-dimensional features");
  for (const auto& [user, vec] : features) {
    if (vec.size() != dim) throw ValidationError("cluster_users: inconsistent dimensions");
    users.push_back(user);
    pts.push_back(vec);
  }

  std::vector<std::vector<double>> distinct;
  for (const auto& p : pts) {
    if (std::find(distinct.begin(), distinct.end(), p) == distinct.end())
      distinct.push_back(p);
    if (static_cast<int>(distinct.size()) >= k) break;
  }
  if (static_cast<int>(distinct.size()) < k)
    throw NumericalError("cluster_users: fewer distinct points than clusters");

  KmeansRun best;
  bool have_best = false;
  for (int r = 0; r < restarts; ++r) {
    RandomStream rng = RandomStream::derive(seed, static_cast<std::uint64_t>(r));
    KmeansRun run = kmeans_once(pts, k, rng);
    if (!have_best || run.wcss < best.wcss) {
      best = std::move(run);
      have_best = true;
    }
  }

  ClusterResult res;
  res.centroids = best.centroids;
  res.wcss = best.wcss;
  for (std::size_t i = 0; i < users.size(); ++i)
    res.assignments[users[i]] = best.assign[i] + 1;

  if (labels) {
    if (k != 2) throw std::invalid_argument("cluster_users: Jaccard scoring needs k = 2");
    res.avg_jaccard = average_jaccard(*labels, res.assignments);
  }
  return res;
}

double average_jaccard(const std::map<std::string, int>& labels,
                       const std::map<std::string, int>& clusters) {
  if (labels.size() != clusters.size())
    throw ValidationError("average_jaccard: label and cluster user sets differ");
  // counts[l][c]: users with label l+1 in cluster c+1.
  double counts[2][2] = {{0, 0}, {0, 0}};
  double label_tot[2] = {0, 0}, cluster_tot[2] = {0, 0};
  for (const auto& [user, lab] : labels) {
    auto it = clusters.find(user);
    if (it == clusters.end())
      throw ValidationError("average_jaccard: user \"" + user + "\" missing from clusters");
    if (lab < 1 || lab > 2 || it->second < 1 || it->second > 2)
      throw ValidationError("average_jaccard: labels and clusters must be 1 or 2");
    counts[lab - 1][it->second - 1] += 1.0;
    label_tot[lab - 1] += 1.0;
    cluster_tot[it->second - 1] += 1.0;
  }
  auto jac = [&](int l, int c) {
    const double inter = counts[l][c];
    const double uni = label_tot[l] + cluster_tot[c] - inter;
    return uni > 0.0 ? inter / uni : 0.0;
  };
  const double straight = jac(0, 0) + jac(1, 1);
  const double swapped = jac(0, 1) + jac(1, 0);
  return 0.5 * std::max(straight, swapped);
}

}  // namespace cet
