#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cetlib/dataset.hpp"

namespace cet {

// Per (poll, unordered pair) aggregates over all users. Pairs are stored in
// canonical orientation: item_i is the lexicographically smaller id, and
// frac_i_chosen counts wins of that item.
struct PairSummary {
  std::string poll_id;
  std::string item_i;
  std::string item_j;
  int n_trials = 0;
  double frac_i_chosen = 0.0;
  double choice_fraction = 0.0;      // min(f, 1-f): distance from an even split
  double mean_rt = 0.0;
  double mean_rt_given_i = 0.0;      // NaN when item_i was never chosen
  double mean_rt_given_j = 0.0;      // NaN when item_j was never chosen
  int n_i = 0;
  int n_j = 0;
};

std::vector<PairSummary> pair_summaries(const Dataset& data);

struct CorrelationResult {
  double r = 0.0;
  double p_value = 1.0;
  int n = 0;
  bool degenerate = false;  // a variable had zero variance; r and p are NaN
};

// Pearson correlation with a two-sided test on n-2 degrees of freedom.
CorrelationResult pearson_correlation(const std::vector<double>& x,
                                      const std::vector<double>& y);

struct PopulationStats {
  double mean_choice_fraction = 0.0;  // over pairs
  double mean_rt = 0.0;               // over all trials
  CorrelationResult fraction_rt_correlation;  // choice_fraction vs pair mean_rt
  int n_pairs = 0;
};

PopulationStats population_stats(const Dataset& data);

struct RankSumStat {
  double u = 0.0;  // U statistic of the first sample
  double p = 1.0;  // two-tailed, normal approximation with tie + continuity correction
};

RankSumStat mann_whitney(const std::vector<double>& a, const std::vector<double>& b);

struct TestResult {
  std::string poll_id;
  std::string item_i;
  std::string item_j;
  int n_i = 0;  // trials where item_i was chosen
  int n_j = 0;
  double u_statistic = 0.0;
  double p_value = 1.0;
  double bonferroni_threshold = 0.0;
  bool reject = false;
};

// Per eligible pair, compares response times conditioned on which item was
// chosen. A pair is eligible when each item has at least min_votes_per_side
// wins; m = number of eligible pairs sets the Bonferroni threshold alpha/m.
std::vector<TestResult> conditional_rt_test(const Dataset& data, double alpha,
                                            int min_votes_per_side = 1);

// H = -sum w_i log w_i with 0 log 0 := 0. Requires a simplex vector.
double utility_entropy(const std::vector<double>& w);

// Per-user posterior means of the labeled parameters, pulled from a flat
// parameter->mean map keyed like "epsilon_u[<user_id>]", then z-scored per
// column (zero-variance columns become all zeros).
std::map<std::string, std::vector<double>> user_feature_matrix(
    const std::map<std::string, double>& parameter_means,
    const std::vector<std::string>& feature_labels);

void standardize_columns(std::map<std::string, std::vector<double>>& features);

struct ClusterResult {
  std::map<std::string, int> assignments;  // user_id -> cluster in {1..k}
  std::vector<std::vector<double>> centroids;
  double wcss = 0.0;
  // Set only when ground-truth labels are supplied (k = 2).
  std::optional<double> avg_jaccard;
};

// k-means with k-means++ seeding; best of `restarts` runs by within-cluster
// sum of squares, ties broken by lowest restart index. Restart r draws from
// the substream derive(seed, r).
ClusterResult cluster_users(const std::map<std::string, std::vector<double>>& features,
                            int k = 2,
                            const std::optional<std::map<std::string, int>>& labels = std::nullopt,
                            int restarts = 32, std::uint64_t seed = 0);

// Half the larger of the two label-to-cluster pairings of summed Jaccard
// indices. Both maps must cover the same users with values in {1, 2}.
double average_jaccard(const std::map<std::string, int>& labels,
                       const std::map<std::string, int>& clusters);

}  // namespace cet
