#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cet {

// One recorded trial: user u saw the pair (item_i, item_j) in a poll and
// picked one side after response_time seconds.
struct Observation {
  std::string poll_id;
  std::string user_id;
  std::string item_i;
  std::string item_j;
  bool chose_i = true;
  double response_time = 0.0;  // seconds, > 0
  int trial_k = 1;             // repetition index within (poll, user, pair)
};

struct Dataset {
  std::vector<Observation> rows;
};

struct LoadOptions {
  // Interpret the response_time column as milliseconds and convert.
  bool times_in_ms = false;
};

// CSV with exact header
//   poll_id,user_id,item_i,item_j,chosen,response_time,trial_k
// where chosen is the literal "i" or "j". Validation failures carry the
// 1-based line number. Enforced: distinct items per row, positive finite
// times, trial_k >= 1, and a unique (poll, user, unordered pair, trial_k).
Dataset load_dataset(const std::string& path, const LoadOptions& opts = {});
Dataset parse_dataset_csv(std::istream& in, const std::string& name,
                          const LoadOptions& opts = {});
void validate_dataset(const Dataset& data, const std::string& name);

// Writes the CSV above; the file appears atomically (temp file + rename).
void save_dataset(const Dataset& data, const std::string& path);

}  // namespace cet
