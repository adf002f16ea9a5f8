#include "cetlib/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "cetlib/analysis.hpp"
#include "cetlib/cet_model.hpp"
#include "cetlib/errors.hpp"
#include "cetlib/io.hpp"
#include "cetlib/stats.hpp"
#include "cetlib/sweep.hpp"

namespace cet {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create directory " + dir + ": " + ec.message());
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Shorter form for plot-oriented tables.
std::string fmtg(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

// --- simulate ----------------------------------------------------------------

std::string cmd_simulate(const SimulateArgs& args) {
  const SimulateConfig cfg = load_simulate_config(args.config_path);
  ensure_dir(args.out_dir);

  RandomStream setup_rng = RandomStream::derive(cfg.seed, 0);

  std::vector<ItemUtilities> polls;
  for (const auto& pc : cfg.polls) {
    ItemUtilities poll;
    poll.poll_id = pc.poll_id;
    if (!pc.utilities.empty()) {
      double sum = 0.0;
      for (double w : pc.utilities) {
        if (!(w > 0.0)) throw ValidationError("poll \"" + pc.poll_id +
                                              "\": utilities must be positive");
        sum += w;
      }
      if (std::fabs(sum - 1.0) > 1e-6)
        throw ValidationError("poll \"" + pc.poll_id + "\": utilities must sum to 1");
      poll.w = pc.utilities;
      for (double& w : poll.w) w /= sum;
    } else {
      // Uniform on the simplex: normalized exponentials.
      poll.w.resize(pc.n_items);
      double sum = 0.0;
      for (double& w : poll.w) {
        w = setup_rng.exponential(1.0);
        sum += w;
      }
      for (double& w : poll.w) w /= sum;
    }
    polls.push_back(std::move(poll));
  }

  const auto& pop = cfg.population;
  auto draw = [&](double mean, double sd) {
    return sd > 0.0 ? setup_rng.truncated_positive_normal(mean, sd) : mean;
  };
  std::vector<UserParams> users(cfg.n_users);
  for (auto& u : users) {
    u.A = draw(pop.A, pop.sd_A);
    u.tau = draw(pop.tau, pop.sd_tau);
    u.rho = draw(pop.rho, pop.sd_rho);
    u.epsilon = pop.sd_epsilon > 0.0
                    ? setup_rng.truncated_positive_normal(pop.epsilon, pop.sd_epsilon)
                    : pop.epsilon;
    u.gamma = draw(pop.gamma, pop.sd_gamma);
  }

  const auto plan = full_trial_plan(polls, cfg.n_users, cfg.trials_per_pair);
  const auto trials = cet_simulate(polls, users, plan, cfg.seed);

  Dataset data;
  data.rows.reserve(trials.size());
  for (const auto& tr : trials) data.rows.push_back(tr.obs);
  const std::string data_path = join(args.out_dir, "dataset.csv");
  save_dataset(data, data_path);

  json truth;
  truth["schema_version"] = 1;
  truth["seed"] = cfg.seed;
  truth["population"] = {
      {"A", pop.A},         {"tau", pop.tau},         {"rho", pop.rho},
      {"epsilon", pop.epsilon}, {"gamma", pop.gamma},
      {"sd_A", pop.sd_A},   {"sd_tau", pop.sd_tau},   {"sd_rho", pop.sd_rho},
      {"sd_epsilon", pop.sd_epsilon}, {"sd_gamma", pop.sd_gamma}};
  truth["polls"] = json::array();
  for (const auto& poll : polls) {
    json pj;
    pj["poll_id"] = poll.poll_id;
    pj["items"] = json::array();
    for (std::size_t i = 0; i < poll.w.size(); ++i)
      pj["items"].push_back(simulated_item_id(static_cast<int>(i)));
    pj["utilities"] = poll.w;
    truth["polls"].push_back(std::move(pj));
  }
  truth["users"] = json::array();
  for (int u = 0; u < cfg.n_users; ++u) {
    truth["users"].push_back({{"user_id", simulated_user_id(u, cfg.n_users)},
                              {"A", users[u].A},
                              {"tau", users[u].tau},
                              {"rho", users[u].rho},
                              {"epsilon", users[u].epsilon},
                              {"gamma", users[u].gamma}});
  }
  atomic_write_file(join(args.out_dir, "truth.json"), truth.dump(2) + "\n");
  return data_path;
}

// --- fit -----------------------------------------------------------------------

namespace {

json summary_to_json(const std::map<std::string, ParameterSummary>& summary) {
  json j;
  for (const auto& [name, s] : summary) {
    j[name] = {{"mean", finite_or_null(s.mean)},
               {"median", finite_or_null(s.median)},
               {"ci5", finite_or_null(s.ci5)},
               {"ci95", finite_or_null(s.ci95)},
               {"rhat", finite_or_null(s.rhat)}};
  }
  return j;
}

double max_finite_rhat(const std::map<std::string, ParameterSummary>& summary) {
  double mx = 0.0;
  for (const auto& [name, s] : summary) {
    if (std::isnan(s.rhat)) continue;
    mx = std::max(mx, s.rhat);  // +inf propagates: definitely not converged
  }
  return mx;
}

ModelKind parse_model(const std::string& s) {
  const auto kind = model_kind_from_string(s);
  if (!kind) throw ValidationError("unknown model kind \"" + s + "\"");
  return *kind;
}

void write_global_traces(const PosteriorSamples& samples, const std::string& dir) {
  ensure_dir(dir);
  const int n_globals = 2 * static_cast<int>(samples.layout.user_params.size());
  for (int j = 0; j < n_globals; ++j) {
    const std::string& name = samples.layout.names[j];
    atomic_write_stream(join(dir, name + ".csv"), [&](std::ostream& out) {
      out << "chain,iteration,value\n";
      for (std::size_t c = 0; c < samples.draws.size(); ++c)
        for (std::size_t k = 0; k < samples.draws[c].size(); ++k)
          out << (c + 1) << ',' << samples.iterations[c][k] << ','
              << fmt(samples.draws[c][k][j]) << '\n';
    });
  }
}

}  // namespace

FitOutcome cmd_fit(const FitArgs& args) {
  const ModelKind kind = parse_model(args.model);
  const Dataset data = load_dataset(args.data_path, LoadOptions{args.times_in_ms});
  const IndexedData indexed = IndexedData::build(data);
  ensure_dir(args.out_dir);

  const PosteriorSamples samples = run_sampler(indexed, kind, args.sampler);
  write_samples_csv(samples, join(args.out_dir, "samples.csv"));

  const auto summary = summarize(samples);
  json report;
  report["model"] = to_string(kind);
  report["chains"] = args.sampler.chains;
  report["iterations"] = args.sampler.iterations;
  report["burn_in"] = args.sampler.burn_in;
  report["thinning"] = args.sampler.thinning;
  report["seed"] = args.sampler.seed;
  report["parameters"] = summary_to_json(summary);
  json acc;
  for (const auto& [key, counter] : samples.acceptance)
    acc[key] = {{"proposed", counter.proposed},
                {"accepted", counter.accepted},
                {"rate", counter.rate()}};
  report["acceptance"] = acc;

  FitOutcome outcome;
  outcome.max_rhat = max_finite_rhat(summary);
  outcome.converged = !(outcome.max_rhat > 1.1);
  report["max_rhat"] = finite_or_null(outcome.max_rhat);
  report["converged"] = outcome.converged;
  atomic_write_file(join(args.out_dir, "summary.json"), report.dump(2) + "\n");

  if (args.write_traces) write_global_traces(samples, join(args.out_dir, "traces"));
  return outcome;
}

// --- compare --------------------------------------------------------------------

std::vector<ModelScore> cmd_compare(const CompareArgs& args) {
  if (args.models.empty()) throw ValidationError("compare: no models requested");
  std::vector<ModelKind> kinds;
  for (const auto& m : args.models) kinds.push_back(parse_model(m));

  const Dataset data = load_dataset(args.data_path, LoadOptions{args.times_in_ms});
  const IndexedData indexed = IndexedData::build(data);
  ensure_dir(args.out_dir);

  std::vector<ModelScore> scores;
  for (const ModelKind kind : kinds) {
    const PosteriorSamples samples = run_sampler(indexed, kind, args.sampler);
    const DicResult dic = compute_dic(samples, indexed);
    scores.push_back({to_string(kind), dic.dic, dic.mean_deviance, dic.p_d});
  }
  std::sort(scores.begin(), scores.end(),
            [](const ModelScore& a, const ModelScore& b) { return a.dic < b.dic; });

  atomic_write_stream(join(args.out_dir, "dic.csv"), [&](std::ostream& out) {
    out << "model,dic,mean_deviance,p_d\n";
    for (const auto& s : scores)
      out << s.model << ',' << fmt(s.dic) << ',' << fmt(s.mean_deviance) << ','
          << fmt(s.p_d) << '\n';
  });
  json j = json::array();
  for (const auto& s : scores)
    j.push_back({{"model", s.model},
                 {"dic", finite_or_null(s.dic)},
                 {"mean_deviance", finite_or_null(s.mean_deviance)},
                 {"p_d", finite_or_null(s.p_d)}});
  atomic_write_file(join(args.out_dir, "dic.json"), j.dump(2) + "\n");
  return scores;
}

// --- analyze --------------------------------------------------------------------

void cmd_analyze(const AnalyzeArgs& args) {
  const Dataset data = load_dataset(args.data_path, LoadOptions{args.times_in_ms});
  ensure_dir(args.out_dir);

  const auto pairs = pair_summaries(data);
  atomic_write_stream(join(args.out_dir, "pair_summaries.csv"), [&](std::ostream& out) {
    out << "poll_id,item_i,item_j,n_trials,frac_i_chosen,choice_fraction,mean_rt,"
           "mean_rt_given_i,mean_rt_given_j\n";
    for (const auto& p : pairs)
      out << p.poll_id << ',' << p.item_i << ',' << p.item_j << ',' << p.n_trials << ','
          << fmtg(p.frac_i_chosen) << ',' << fmtg(p.choice_fraction) << ','
          << fmtg(p.mean_rt) << ',' << fmtg(p.mean_rt_given_i) << ','
          << fmtg(p.mean_rt_given_j) << '\n';
  });

  atomic_write_stream(join(args.out_dir, "bubble.csv"), [&](std::ostream& out) {
    out << "poll_id,item_i,item_j,frac_i_chosen,mean_rt\n";
    for (const auto& p : pairs)
      out << p.poll_id << ',' << p.item_i << ',' << p.item_j << ','
          << fmtg(p.frac_i_chosen) << ',' << fmtg(p.mean_rt) << '\n';
  });

  // Five-number response-time summaries per pair, the boxplot feed.
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> rts;
  for (const auto& o : data.rows) {
    const bool flip = o.item_j < o.item_i;
    rts[{o.poll_id, flip ? o.item_j : o.item_i, flip ? o.item_i : o.item_j}].push_back(
        o.response_time);
  }
  atomic_write_stream(join(args.out_dir, "quartiles.csv"), [&](std::ostream& out) {
    out << "poll_id,item_i,item_j,n,min,q1,median,q3,max\n";
    for (auto& [key, v] : rts) {
      std::sort(v.begin(), v.end());
      out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key)
          << ',' << v.size() << ',' << fmtg(v.front()) << ','
          << fmtg(quantile_sorted(v, 0.25)) << ',' << fmtg(quantile_sorted(v, 0.5))
          << ',' << fmtg(quantile_sorted(v, 0.75)) << ',' << fmtg(v.back()) << '\n';
    }
  });

  const auto tests = conditional_rt_test(data, args.alpha, args.min_votes_per_side);
  atomic_write_stream(join(args.out_dir, "ranksum.csv"), [&](std::ostream& out) {
    out << "poll_id,item_i,item_j,n_i,n_j,u_statistic,p_value,bonferroni_threshold,"
           "reject\n";
    for (const auto& t : tests)
      out << t.poll_id << ',' << t.item_i << ',' << t.item_j << ',' << t.n_i << ','
          << t.n_j << ',' << fmtg(t.u_statistic) << ',' << fmtg(t.p_value) << ','
          << fmtg(t.bonferroni_threshold) << ',' << (t.reject ? 1 : 0) << '\n';
  });

  const PopulationStats stats = population_stats(data);
  json j;
  j["mean_choice_fraction"] = finite_or_null(stats.mean_choice_fraction);
  j["mean_rt"] = finite_or_null(stats.mean_rt);
  j["pearson_r"] = finite_or_null(stats.fraction_rt_correlation.r);
  j["pearson_p"] = finite_or_null(stats.fraction_rt_correlation.p_value);
  j["correlation_degenerate"] = stats.fraction_rt_correlation.degenerate;
  j["n_pairs"] = stats.n_pairs;
  j["n_trials"] = static_cast<std::int64_t>(data.rows.size());
  j["alpha"] = args.alpha;
  j["eligible_pairs"] = static_cast<std::int64_t>(tests.size());
  std::int64_t rejections = 0;
  for (const auto& t : tests) rejections += t.reject ? 1 : 0;
  j["ranksum_rejections"] = rejections;
  atomic_write_file(join(args.out_dir, "population_stats.json"), j.dump(2) + "\n");
}

// --- cluster --------------------------------------------------------------------

namespace {

std::vector<std::string> split_features(const std::string& spec) {
  if (spec == "all") return {"A", "tau", "rho", "epsilon", "gamma"};
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(spec);
  while (std::getline(ss, cur, ','))
    if (!cur.empty()) out.push_back(cur);
  if (out.empty()) throw ValidationError("cluster: empty feature set \"" + spec + "\"");
  return out;
}

std::string feature_set_name(const std::string& spec) {
  std::string name = spec;
  std::replace(name.begin(), name.end(), ',', '_');
  return name;
}

std::map<std::string, int> load_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "user_id,label")
    throw ValidationError(path + ": expected header \"user_id,label\"");
  std::map<std::string, int> labels;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || comma == 0)
      throw ValidationError(path + ":" + std::to_string(line_no) + ": expected 2 fields");
    const std::string user = line.substr(0, comma);
    const std::string lab = line.substr(comma + 1);
    if (lab != "1" && lab != "2")
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": label must be 1 or 2");
    if (!labels.emplace(user, lab == "1" ? 1 : 2).second)
      throw ValidationError(path + ":" + std::to_string(line_no) + ": duplicate user \"" +
                            user + "\"");
  }
  if (labels.empty()) throw ValidationError(path + ": no label rows");
  return labels;
}

}  // namespace

void cmd_cluster(const ClusterArgs& args) {
  const SamplesTable table = read_samples_csv(args.samples_path);
  const auto means = table.parameter_means();
  ensure_dir(args.out_dir);

  std::vector<std::string> specs = args.feature_sets;
  if (specs.empty())
    specs = {"A", "tau", "rho", "epsilon", "gamma", "epsilon,gamma", "all"};

  std::optional<std::map<std::string, int>> labels;
  if (!args.labels_path.empty()) labels = load_labels_csv(args.labels_path);

  json jaccard;
  for (const auto& spec : specs) {
    const auto features = user_feature_matrix(means, split_features(spec));
    if (labels) {
      for (const auto& [user, lab] : *labels)
        if (!features.count(user))
          throw ValidationError("cluster: labeled user \"" + user +
                                "\" missing from samples");
      if (labels->size() != features.size())
        throw ValidationError("cluster: samples contain users without labels");
    }
    const ClusterResult res =
        cluster_users(features, 2, labels, args.restarts, args.seed);

    const std::string name = feature_set_name(spec);
    atomic_write_stream(join(args.out_dir, "assignments_" + name + ".csv"),
                        [&](std::ostream& out) {
                          out << "user_id,cluster\n";
                          for (const auto& [user, c] : res.assignments)
                            out << user << ',' << c << '\n';
                        });
    json entry;
    entry["features"] = split_features(spec);
    entry["wcss"] = finite_or_null(res.wcss);
    if (res.avg_jaccard) entry["avg_jaccard"] = finite_or_null(*res.avg_jaccard);
    jaccard[name] = std::move(entry);
  }
  atomic_write_file(join(args.out_dir, "jaccard.json"), jaccard.dump(2) + "\n");
}

// --- reference models ------------------------------------------------------------

void cmd_ref_density(const RefDensityArgs& args) {
  if (args.grid < 2) throw ValidationError("density: grid must be >= 2");
  if (!(args.t_max > 0.0)) throw ValidationError("density: t_max must be positive");
  const bool is_pc = args.model == "pc";
  if (!is_pc && args.model != "ddm")
    throw ValidationError("density: model must be pc or ddm");

  atomic_write_stream(args.out_path, [&](std::ostream& out) {
    out << "t,f_a,f_b,f_total\n";
    for (int i = 1; i <= args.grid; ++i) {
      const double t = args.t_max * i / args.grid;
      double fa, fb;
      if (is_pc) {
        fa = pc_likelihood({Choice::a, t}, args.pc);
        fb = pc_likelihood({Choice::b, t}, args.pc);
      } else {
        fa = ddm_likelihood({Choice::a, t}, args.ddm);
        fb = ddm_likelihood({Choice::b, t}, args.ddm);
      }
      // Plot output only: truncation ringing is clamped here, never in
      // likelihood evaluations.
      fa = std::max(0.0, fa);
      fb = std::max(0.0, fb);
      out << fmtg(t) << ',' << fmtg(fa) << ',' << fmtg(fb) << ',' << fmtg(fa + fb)
          << '\n';
    }
  });
}

void cmd_ref_sweep(const RefSweepArgs& args) {
  if (args.grid_steps < 1) throw ValidationError("sweep: grid_steps must be >= 1");
  if (!(args.grid_min < args.grid_max))
    throw ValidationError("sweep: grid_min must be below grid_max");
  std::vector<double> grid;
  for (int i = 0; i <= args.grid_steps; ++i)
    grid.push_back(args.grid_min +
                   (args.grid_max - args.grid_min) * i / args.grid_steps);

  std::vector<SweepPoint> points;
  if (args.model == "pc") {
    points = pc_sweep(args.pc.threshold_a, args.pc.threshold_b, grid);
  } else if (args.model == "ddm") {
    points = ddm_sweep(args.ddm.z, args.ddm.K, args.ddm.sigma2, args.ddm.series_terms,
                       grid);
  } else if (args.model == "cet") {
    points = cet_sweep(args.user, grid);
  } else {
    throw ValidationError("sweep: model must be pc, ddm, or cet");
  }

  atomic_write_stream(args.out_path, [&](std::ostream& out) {
    out << "param_value,p,mu,mu_a,mu_b\n";
    for (const auto& pt : points)
      out << fmtg(pt.param_value) << ',' << fmtg(pt.p) << ',' << fmtg(pt.mu) << ','
          << fmtg(pt.mu_a) << ',' << fmtg(pt.mu_b) << '\n';
  });
}

void cmd_bias(const BiasArgs& args) {
  EpsilonDist dist;
  if (args.dist == "deterministic") dist.kind = EpsilonDist::Kind::deterministic;
  else if (args.dist == "exponential") dist.kind = EpsilonDist::Kind::exponential;
  else if (args.dist == "truncated_normal") dist.kind = EpsilonDist::Kind::truncated_normal;
  else throw ValidationError("bias: dist must be deterministic, exponential, or truncated_normal");
  dist.mean = args.eps_mean;
  dist.sd = args.eps_sd;

  std::vector<double> grid = args.w_grid;
  if (grid.empty())
    for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);

  RandomStream rng = RandomStream::derive(args.seed, 0);
  atomic_write_stream(args.out_path, [&](std::ostream& out) {
    out << "w,engagement_shift,asymptotic_estimate,finite_n_estimate,n,reps\n";
    for (double w : grid) {
      const BiasReport rep = engagement_bias(w, dist, args.n, args.reps, rng);
      out << fmtg(rep.w) << ',' << fmtg(rep.engagement_shift) << ','
          << fmtg(rep.asymptotic_estimate) << ',' << fmtg(rep.finite_n_estimate) << ','
          << rep.n << ',' << rep.reps << '\n';
    }
  });
}

}  // namespace cet
