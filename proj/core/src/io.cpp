#include "cetlib/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cetlib/errors.hpp"

namespace cet {

void atomic_write_stream(const std::string& path,
                         const std::function<void(std::ostream&)>& writer) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open for writing: " + tmp);
    writer(out);
    out.flush();
    if (!out) throw ValidationError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw ValidationError("cannot rename " + tmp + " to " + path + ": " +
                          std::strerror(errno));
  }
}

void atomic_write_file(const std::string& path, const std::string& content) {
  atomic_write_stream(path, [&](std::ostream& out) { out << content; });
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw ValidationError("read failed: " + path);
  return ss.str();
}

// --- simulation config -------------------------------------------------------

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& name, const std::string& msg) {
  throw ValidationError(name + ": " + msg);
}

double number_or(const json& j, const std::string& key, double fallback,
                 const std::string& name) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) config_fail(name, "field \"" + key + "\" must be a number");
  return j[key].get<double>();
}

int require_int(const json& j, const std::string& key, const std::string& name) {
  if (!j.contains(key)) config_fail(name, "missing field \"" + key + "\"");
  if (!j[key].is_number_integer()) config_fail(name, "field \"" + key + "\" must be an integer");
  return j[key].get<int>();
}

}  // namespace

SimulateConfig parse_simulate_config(const std::string& json_text, const std::string& name) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_fail(name, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) config_fail(name, "top-level value must be an object");

  SimulateConfig cfg;
  cfg.schema_version = require_int(j, "schema_version", name);
  if (cfg.schema_version != 1)
    config_fail(name, "unsupported schema_version " + std::to_string(cfg.schema_version));

  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0)
      config_fail(name, "field \"seed\" must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  cfg.n_users = require_int(j, "n_users", name);
  if (cfg.n_users < 1) config_fail(name, "n_users must be >= 1");
  if (j.contains("trials_per_pair"))
    cfg.trials_per_pair = require_int(j, "trials_per_pair", name);
  if (cfg.trials_per_pair < 1) config_fail(name, "trials_per_pair must be >= 1");

  if (!j.contains("polls") || !j["polls"].is_array() || j["polls"].empty())
    config_fail(name, "field \"polls\" must be a non-empty array");
  for (const auto& pj : j["polls"]) {
    if (!pj.is_object()) config_fail(name, "each poll must be an object");
    PollConfig pc;
    if (!pj.contains("poll_id") || !pj["poll_id"].is_string())
      config_fail(name, "each poll needs a string \"poll_id\"");
    pc.poll_id = pj["poll_id"].get<std::string>();
    pc.n_items = require_int(pj, "n_items", name);
    if (pc.n_items < 2) config_fail(name, "poll \"" + pc.poll_id + "\": n_items must be >= 2");
    if (pj.contains("utilities")) {
      if (!pj["utilities"].is_array())
        config_fail(name, "poll \"" + pc.poll_id + "\": utilities must be an array");
      for (const auto& uj : pj["utilities"]) {
        if (!uj.is_number())
          config_fail(name, "poll \"" + pc.poll_id + "\": utilities must be numbers");
        pc.utilities.push_back(uj.get<double>());
      }
      if (!pc.utilities.empty() &&
          pc.utilities.size() != static_cast<std::size_t>(pc.n_items))
        config_fail(name, "poll \"" + pc.poll_id + "\": utilities length must equal n_items");
    }
    cfg.polls.push_back(std::move(pc));
  }

  if (j.contains("population")) {
    const auto& pj = j["population"];
    if (!pj.is_object()) config_fail(name, "field \"population\" must be an object");
    PopulationConfig def;
    auto& p = cfg.population;
    p.A = number_or(pj, "A", def.A, name);
    p.tau = number_or(pj, "tau", def.tau, name);
    p.rho = number_or(pj, "rho", def.rho, name);
    p.epsilon = number_or(pj, "epsilon", def.epsilon, name);
    p.gamma = number_or(pj, "gamma", def.gamma, name);
    p.sd_A = number_or(pj, "sd_A", def.sd_A, name);
    p.sd_tau = number_or(pj, "sd_tau", def.sd_tau, name);
    p.sd_rho = number_or(pj, "sd_rho", def.sd_rho, name);
    p.sd_epsilon = number_or(pj, "sd_epsilon", def.sd_epsilon, name);
    p.sd_gamma = number_or(pj, "sd_gamma", def.sd_gamma, name);
    for (double v : {p.A, p.tau, p.rho, p.gamma})
      if (!(v > 0.0)) config_fail(name, "population location parameters must be positive");
    if (p.epsilon < 0.0) config_fail(name, "population epsilon must be non-negative");
    for (double v : {p.sd_A, p.sd_tau, p.sd_rho, p.sd_epsilon, p.sd_gamma})
      if (v < 0.0) config_fail(name, "population sds must be non-negative");
  }
  return cfg;
}

SimulateConfig load_simulate_config(const std::string& path) {
  return parse_simulate_config(read_text_file(path), path);
}

// --- posterior sample table ---------------------------------------------------

SamplesTable read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "chain,iteration,parameter,value")
    throw ValidationError(path + ": unexpected header \"" + line + "\"");

  SamplesTable t;
  std::map<int, std::size_t> chain_pos;
  long line_no = 1;
  bool first_block_done = false;
  std::size_t param_cursor = 0;

  auto fail = [&](const std::string& msg) {
    throw ValidationError(path + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::size_t p1 = line.find(',');
    std::size_t p2 = p1 == std::string::npos ? std::string::npos : line.find(',', p1 + 1);
    std::size_t p3 = p2 == std::string::npos ? std::string::npos : line.find(',', p2 + 1);
    if (p3 == std::string::npos) fail("expected 4 comma-separated fields");

    int chain = 0, iteration = 0;
    double value = 0.0;
    try {
      std::size_t used = 0;
      const std::string cs = line.substr(0, p1);
      chain = std::stoi(cs, &used);
      if (used != cs.size()) fail("bad chain id \"" + cs + "\"");
      const std::string is = line.substr(p1 + 1, p2 - p1 - 1);
      iteration = std::stoi(is, &used);
      if (used != is.size()) fail("bad iteration \"" + is + "\"");
      const std::string vs = line.substr(p3 + 1);
      value = std::stod(vs, &used);
      if (used != vs.size()) fail("bad value \"" + vs + "\"");
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception&) {
      fail("malformed numeric field");
    }
    const std::string param = line.substr(p2 + 1, p3 - p2 - 1);
    if (param.empty()) fail("empty parameter name");
    if (chain < 1) fail("chain ids must be >= 1");

    auto [it, inserted] = chain_pos.emplace(chain, t.chain_ids.size());
    if (inserted) {
      t.chain_ids.push_back(chain);
      t.iterations.emplace_back();
      t.draws.emplace_back();
    }
    const std::size_t c = it->second;

    const bool new_block = t.iterations[c].empty() || t.iterations[c].back() != iteration;
    if (new_block) {
      if (!t.draws[c].empty() && t.draws[c].back().size() != t.parameters.size())
        fail("incomplete parameter block before this row");
      if (!first_block_done && !t.parameters.empty()) first_block_done = true;
      t.iterations[c].push_back(iteration);
      t.draws[c].emplace_back();
      param_cursor = 0;
    }

    if (!first_block_done) {
      t.parameters.push_back(param);
    } else {
      if (param_cursor >= t.parameters.size()) fail("extra parameter row in block");
      if (t.parameters[param_cursor] != param)
        fail("parameter order mismatch: expected \"" + t.parameters[param_cursor] +
             "\", got \"" + param + "\"");
    }
    t.draws[c].back().push_back(value);
    ++param_cursor;
  }

  if (t.parameters.empty()) throw ValidationError(path + ": no sample rows");
  for (std::size_t c = 0; c < t.draws.size(); ++c)
    if (!t.draws[c].empty() && t.draws[c].back().size() != t.parameters.size())
      throw ValidationError(path + ": trailing incomplete parameter block");
  return t;
}

std::map<std::string, double> SamplesTable::parameter_means() const {
  std::map<std::string, double> out;
  std::vector<double> acc(parameters.size(), 0.0);
  std::int64_t n = 0;
  for (const auto& chain : draws) {
    for (const auto& draw : chain) {
      for (std::size_t j = 0; j < parameters.size(); ++j) acc[j] += draw[j];
      ++n;
    }
  }
  if (n == 0) throw ValidationError("sample table has no draws");
  for (std::size_t j = 0; j < parameters.size(); ++j)
    out[parameters[j]] = acc[j] / static_cast<double>(n);
  return out;
}

}  // namespace cet
