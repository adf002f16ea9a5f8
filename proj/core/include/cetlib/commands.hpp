#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cetlib/cet_model.hpp"
#include "cetlib/inference.hpp"
#include "cetlib/refmodels.hpp"

namespace cet {

// The command layer behind the CLI: each cmd_* loads inputs, runs the library
// call, and writes the report files (atomically) into an output directory.

struct SimulateArgs {
  std::string config_path;
  std::string out_dir = ".";
};
// Writes dataset.csv plus truth.json (utilities, user parameters, population
// settings). Returns the dataset path.
std::string cmd_simulate(const SimulateArgs& args);

struct FitArgs {
  std::string data_path;
  std::string model = "choice_engagement_time";
  SamplerConfig sampler;
  bool times_in_ms = false;
  std::string out_dir = ".";
  bool write_traces = true;  // per-population-parameter extracts under traces/
};
struct FitOutcome {
  double max_rhat = 0.0;   // over parameters with a defined diagnostic
  bool converged = true;   // max_rhat <= 1.1
};
// Writes samples.csv, summary.json, and traces/<parameter>.csv.
FitOutcome cmd_fit(const FitArgs& args);

struct CompareArgs {
  std::string data_path;
  std::vector<std::string> models = {"choice", "choice_engagement",
                                     "choice_engagement_time"};
  SamplerConfig sampler;
  bool times_in_ms = false;
  std::string out_dir = ".";
};
struct ModelScore {
  std::string model;
  double dic = 0.0;
  double mean_deviance = 0.0;
  double p_d = 0.0;
};
// Fits every requested kind with the same sampler settings; writes dic.csv
// and dic.json sorted by ascending DIC and returns the same rows.
std::vector<ModelScore> cmd_compare(const CompareArgs& args);

struct AnalyzeArgs {
  std::string data_path;
  double alpha = 0.05;
  int min_votes_per_side = 1;
  bool times_in_ms = false;
  std::string out_dir = ".";
};
// Writes pair_summaries.csv, population_stats.json, quartiles.csv,
// ranksum.csv, and bubble.csv.
void cmd_analyze(const AnalyzeArgs& args);

struct ClusterArgs {
  std::string samples_path;
  // Each entry is a comma-joined parameter list ("epsilon,gamma") or "all";
  // empty means the default seven single/combined sets.
  std::vector<std::string> feature_sets;
  std::string labels_path;  // optional "user_id,label" CSV with labels 1/2
  int restarts = 32;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};
// Writes assignments_<set>.csv per feature set and jaccard.json.
void cmd_cluster(const ClusterArgs& args);

struct RefDensityArgs {
  std::string model;  // "pc" or "ddm"
  PoissonCounterParams pc;
  DiffusionParams ddm;
  double t_max = 5.0;
  int grid = 500;
  std::string out_path = "density.csv";
};
// Writes t,f_a,f_b,f_total rows; values are clamped at zero because this is
// plot output and short series truncations can ring negative.
void cmd_ref_density(const RefDensityArgs& args);

struct RefSweepArgs {
  std::string model;  // "pc", "ddm", or "cet"
  PoissonCounterParams pc;   // thresholds used; alpha taken from the grid
  DiffusionParams ddm;       // drift taken from the grid
  UserParams user;           // cet: utilities (w, 1-w) from the grid
  double grid_min = 0.0;
  double grid_max = 1.0;
  int grid_steps = 99;
  std::string out_path = "sweep.csv";
};
void cmd_ref_sweep(const RefSweepArgs& args);

struct BiasArgs {
  std::string dist = "exponential";  // deterministic | exponential | truncated_normal
  double eps_mean = 0.5;
  double eps_sd = 0.0;
  std::vector<double> w_grid;  // empty: 0, 0.1, ..., 1
  std::int64_t n = 100000;
  std::int64_t reps = 1;
  std::uint64_t seed = 0;
  std::string out_path = "bias.csv";
};
void cmd_bias(const BiasArgs& args);

}  // namespace cet
