#include "cetlib/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "cetlib/errors.hpp"
#include "cetlib/io.hpp"

namespace cet {

namespace {

const char* kHeader = "poll_id,user_id,item_i,item_j,chosen,response_time,trial_k";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

[[noreturn]] void fail(const std::string& name, std::size_t line_no, const std::string& msg) {
  throw ValidationError(name + ":" + std::to_string(line_no) + ": " + msg);
}

void check_id(const std::string& name, std::size_t line_no, const char* what,
              const std::string& id) {
  if (id.empty()) fail(name, line_no, std::string(what) + " is empty");
  for (char c : id)
    if (c == ',' || c == '\n' || c == '\r')
      fail(name, line_no, std::string(what) + " contains a separator character");
}

}  // namespace

Dataset parse_dataset_csv(std::istream& in, const std::string& name, const LoadOptions& opts) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader)
    throw ValidationError(name + ":1: header must be exactly \"" + kHeader + "\"");

  Dataset data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) fail(name, line_no, "expected 7 fields, got " + std::to_string(f.size()));

    Observation o;
    o.poll_id = f[0];
    o.user_id = f[1];
    o.item_i = f[2];
    o.item_j = f[3];
    check_id(name, line_no, "poll_id", o.poll_id);
    check_id(name, line_no, "user_id", o.user_id);
    check_id(name, line_no, "item_i", o.item_i);
    check_id(name, line_no, "item_j", o.item_j);
    if (o.item_i == o.item_j) fail(name, line_no, "item_i and item_j are identical");

    if (f[4] == "i") o.chose_i = true;
    else if (f[4] == "j") o.chose_i = false;
    else fail(name, line_no, "chosen must be \"i\" or \"j\", got \"" + f[4] + "\"");

    try {
      std::size_t used = 0;
      o.response_time = std::stod(f[5], &used);
      if (used != f[5].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      fail(name, line_no, "response_time is not a number: \"" + f[5] + "\"");
    }
    if (opts.times_in_ms) o.response_time /= 1000.0;
    if (!std::isfinite(o.response_time) || !(o.response_time > 0.0))
      fail(name, line_no, "response_time must be a positive finite number");

    try {
      std::size_t used = 0;
      o.trial_k = std::stoi(f[6], &used);
      if (used != f[6].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      fail(name, line_no, "trial_k is not an integer: \"" + f[6] + "\"");
    }
    if (o.trial_k < 1) fail(name, line_no, "trial_k must be >= 1");

    data.rows.push_back(std::move(o));
  }
  validate_dataset(data, name);
  return data;
}

Dataset load_dataset(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file: " + path);
  return parse_dataset_csv(in, path, opts);
}

void validate_dataset(const Dataset& data, const std::string& name) {
  // Uniqueness over (poll, user, unordered pair, trial_k); the pair is
  // unordered because (i, j) and (j, i) describe the same comparison.
  std::set<std::tuple<std::string, std::string, std::string, std::string, int>> seen;
  std::size_t row_no = 1;
  for (const auto& o : data.rows) {
    ++row_no;
    if (o.item_i == o.item_j)
      fail(name, row_no, "item_i and item_j are identical");
    if (!std::isfinite(o.response_time) || !(o.response_time > 0.0))
      fail(name, row_no, "response_time must be a positive finite number");
    if (o.trial_k < 1) fail(name, row_no, "trial_k must be >= 1");
    const std::string& lo = o.item_i < o.item_j ? o.item_i : o.item_j;
    const std::string& hi = o.item_i < o.item_j ? o.item_j : o.item_i;
    if (!seen.emplace(o.poll_id, o.user_id, lo, hi, o.trial_k).second)
      fail(name, row_no, "duplicate (poll, user, pair, trial_k)");
  }
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ostringstream out;
  out << kHeader << "\n";
  char buf[64];
  for (const auto& o : data.rows) {
    std::snprintf(buf, sizeof buf, "%.17g", o.response_time);
    out << o.poll_id << ',' << o.user_id << ',' << o.item_i << ',' << o.item_j << ','
        << (o.chose_i ? 'i' : 'j') << ',' << buf << ',' << o.trial_k << "\n";
  }
  atomic_write_file(path, out.str());
}

}  // namespace cet
