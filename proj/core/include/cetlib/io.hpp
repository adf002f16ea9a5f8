#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace cet {

// Writes content to a sibling temp file, then renames over the target, so
// readers never observe a partially written file.
void atomic_write_file(const std::string& path, const std::string& content);

// Streaming variant for outputs too large to buffer in one string.
void atomic_write_stream(const std::string& path,
                         const std::function<void(std::ostream&)>& writer);

std::string read_text_file(const std::string& path);

// --- simulation config (JSON, versioned) -----------------------------------

struct PopulationConfig {
  double A = 1.0, tau = 1.0, rho = 0.5, epsilon = 0.2, gamma = 1.0;
  double sd_A = 0.1, sd_tau = 0.1, sd_rho = 0.05, sd_epsilon = 0.05, sd_gamma = 0.1;
};

struct PollConfig {
  std::string poll_id;
  int n_items = 2;
  std::vector<double> utilities;  // empty: drawn uniformly on the simplex
};

struct SimulateConfig {
  int schema_version = 1;  // only version 1 is understood
  std::uint64_t seed = 0;
  int n_users = 1;
  int trials_per_pair = 1;
  std::vector<PollConfig> polls;
  PopulationConfig population;
};

SimulateConfig load_simulate_config(const std::string& path);
SimulateConfig parse_simulate_config(const std::string& json_text, const std::string& name);

// --- posterior sample table (long CSV) --------------------------------------

// Rows of "chain,iteration,parameter,value" read back into per-chain blocks.
// Parameter order is taken from the first (chain, iteration) block and must
// repeat identically in every block.
struct SamplesTable {
  std::vector<std::string> parameters;
  std::vector<int> chain_ids;
  std::vector<std::vector<int>> iterations;               // [chain][sample]
  std::vector<std::vector<std::vector<double>>> draws;    // [chain][sample][param]
  std::map<std::string, double> parameter_means() const;
};

SamplesTable read_samples_csv(const std::string& path);

}  // namespace cet
