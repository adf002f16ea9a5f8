#include <cstdio>
#include <exception>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cetlib/commands.hpp"
#include "cetlib/errors.hpp"

namespace {

// Exit codes: 0 success, 2 input validation, 3 numerical failure,
// 4 sampler ran but some R-hat exceeded 1.1 (outputs are still written).
constexpr int kOk = 0;
constexpr int kBadInput = 2;
constexpr int kNumerical = 3;
constexpr int kNotConverged = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pairwise choice and response-time modeling toolkit"};
  app.require_subcommand(1);

  cet::SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "draw a synthetic dataset");
  c_sim->add_option("--config", sim.config_path, "JSON simulation config")->required();
  c_sim->add_option("--out", sim.out_dir, "output directory (default .)");

  cet::FitArgs fit;
  bool fit_sequential = false;
  CLI::App* c_fit = app.add_subcommand("fit", "hierarchical Bayesian fit (MCMC)");
  c_fit->add_option("--data", fit.data_path, "dataset CSV")->required();
  c_fit->add_option("--model", fit.model, "choice | ce | cet (default cet)");
  c_fit->add_option("--chains", fit.sampler.chains, "independent chains (default 3)");
  c_fit->add_option("--iters", fit.sampler.iterations, "iterations per chain (default 5000)");
  c_fit->add_option("--burnin", fit.sampler.burn_in, "discarded iterations (default 500)");
  c_fit->add_option("--thin", fit.sampler.thinning, "keep every k-th draw (default 1)");
  c_fit->add_option("--proposal-sd", fit.sampler.proposal_sd,
                    "random-walk proposal sd (default 0.02)");
  c_fit->add_option("--seed", fit.sampler.seed, "RNG seed (default 0)");
  c_fit->add_flag("--ms", fit.times_in_ms, "input response times are in milliseconds");
  c_fit->add_flag("--sequential", fit_sequential, "run chains on one thread");
  c_fit->add_flag("!--no-traces", fit.write_traces, "skip per-parameter trace files");
  c_fit->add_option("--out", fit.out_dir, "output directory (default .)");

  cet::CompareArgs cmp;
  bool cmp_sequential = false;
  CLI::App* c_cmp = app.add_subcommand("compare", "DIC comparison across model kinds");
  c_cmp->add_option("--data", cmp.data_path, "dataset CSV")->required();
  c_cmp->add_option("--models", cmp.models,
                    "model kinds to fit (default: choice ce cet)");
  c_cmp->add_option("--chains", cmp.sampler.chains);
  c_cmp->add_option("--iters", cmp.sampler.iterations);
  c_cmp->add_option("--burnin", cmp.sampler.burn_in);
  c_cmp->add_option("--thin", cmp.sampler.thinning);
  c_cmp->add_option("--proposal-sd", cmp.sampler.proposal_sd);
  c_cmp->add_option("--seed", cmp.sampler.seed);
  c_cmp->add_flag("--ms", cmp.times_in_ms);
  c_cmp->add_flag("--sequential", cmp_sequential);
  c_cmp->add_option("--out", cmp.out_dir);

  cet::AnalyzeArgs ana;
  CLI::App* c_ana = app.add_subcommand("analyze", "descriptive statistics and rank-sum tests");
  c_ana->add_option("--data", ana.data_path, "dataset CSV")->required();
  c_ana->add_option("--alpha", ana.alpha, "family-wise test level (default 0.05)");
  c_ana->add_option("--min-votes", ana.min_votes_per_side,
                    "eligibility: wins required per side (default 1)");
  c_ana->add_flag("--ms", ana.times_in_ms);
  c_ana->add_option("--out", ana.out_dir);

  cet::ClusterArgs clu;
  CLI::App* c_clu = app.add_subcommand("cluster", "k-means over per-user posterior means");
  c_clu->add_option("--samples", clu.samples_path, "samples.csv from fit")->required();
  c_clu->add_option("--features", clu.feature_sets,
                    "feature sets, e.g. epsilon,gamma or all (default: seven standard sets)");
  c_clu->add_option("--labels", clu.labels_path, "optional user_id,label CSV (labels 1/2)");
  c_clu->add_option("--restarts", clu.restarts, "k-means restarts (default 32)");
  c_clu->add_option("--seed", clu.seed);
  c_clu->add_option("--out", clu.out_dir);

  CLI::App* c_ref = app.add_subcommand("refmodels", "reference race-model tables");
  c_ref->require_subcommand(1);

  cet::RefDensityArgs dens;
  CLI::App* c_dens = c_ref->add_subcommand("density", "response-time density grid");
  c_dens->add_option("--model", dens.model, "pc | ddm")->required();
  c_dens->add_option("--alpha", dens.pc.alpha, "pc: a-stream rate");
  c_dens->add_option("--beta", dens.pc.beta, "pc: b-stream rate");
  c_dens->add_option("--ka", dens.pc.threshold_a, "pc: a threshold");
  c_dens->add_option("--kb", dens.pc.threshold_b, "pc: b threshold");
  c_dens->add_option("--z", dens.ddm.z, "ddm: starting point");
  c_dens->add_option("--boundary", dens.ddm.K, "ddm: upper boundary");
  c_dens->add_option("--drift", dens.ddm.drift, "ddm: drift");
  c_dens->add_option("--sigma2", dens.ddm.sigma2, "ddm: diffusion variance");
  c_dens->add_option("--terms", dens.ddm.series_terms, "ddm: series terms");
  c_dens->add_option("--tmax", dens.t_max, "grid upper end (default 5)");
  c_dens->add_option("--grid", dens.grid, "grid points (default 500)");
  c_dens->add_option("--out", dens.out_path, "output CSV (default density.csv)");

  cet::RefSweepArgs swp;
  CLI::App* c_swp = c_ref->add_subcommand("sweep", "choice probability and mean time curves");
  c_swp->add_option("--model", swp.model, "pc | ddm | cet")->required();
  c_swp->add_option("--ka", swp.pc.threshold_a, "pc: a threshold");
  c_swp->add_option("--kb", swp.pc.threshold_b, "pc: b threshold");
  c_swp->add_option("--z", swp.ddm.z, "ddm: starting point");
  c_swp->add_option("--boundary", swp.ddm.K, "ddm: upper boundary");
  c_swp->add_option("--sigma2", swp.ddm.sigma2, "ddm: diffusion variance");
  c_swp->add_option("--terms", swp.ddm.series_terms, "ddm: series terms");
  c_swp->add_option("--A", swp.user.A, "cet: decision-time scale");
  c_swp->add_option("--tau", swp.user.tau, "cet: mean latency");
  c_swp->add_option("--rho", swp.user.rho, "cet: rate offset");
  c_swp->add_option("--epsilon", swp.user.epsilon, "cet: engagement noise");
  c_swp->add_option("--gamma", swp.user.gamma, "cet: discrimination exponent");
  c_swp->add_option("--grid-min", swp.grid_min, "swept value lower end");
  c_swp->add_option("--grid-max", swp.grid_max, "swept value upper end");
  c_swp->add_option("--grid-steps", swp.grid_steps, "grid intervals (default 99)");
  c_swp->add_option("--out", swp.out_path, "output CSV (default sweep.csv)");

  cet::BiasArgs bias;
  CLI::App* c_bias = c_ref->add_subcommand("bias", "vote-share estimator bias under engagement noise");
  c_bias->add_option("--dist", bias.dist, "deterministic | exponential | truncated_normal");
  c_bias->add_option("--eps-mean", bias.eps_mean, "noise mean (default 0.5)");
  c_bias->add_option("--eps-sd", bias.eps_sd, "noise sd (truncated_normal)");
  c_bias->add_option("--w", bias.w_grid, "utility grid (default 0 0.1 ... 1)");
  c_bias->add_option("--n", bias.n, "voters per replicate (default 100000)");
  c_bias->add_option("--reps", bias.reps, "replicates per grid point (default 1)");
  c_bias->add_option("--seed", bias.seed);
  c_bias->add_option("--out", bias.out_path, "output CSV (default bias.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*c_sim) {
      cet::cmd_simulate(sim);
    } else if (*c_fit) {
      fit.sampler.parallel_chains = !fit_sequential;
      const cet::FitOutcome out = cet::cmd_fit(fit);
      if (!out.converged) {
        std::fprintf(stderr,
                     "warning: max split R-hat %.4f exceeds 1.1; treat the "
                     "posterior summaries as unconverged\n",
                     out.max_rhat);
        return kNotConverged;
      }
    } else if (*c_cmp) {
      cmp.sampler.parallel_chains = !cmp_sequential;
      cet::cmd_compare(cmp);
    } else if (*c_ana) {
      cet::cmd_analyze(ana);
    } else if (*c_clu) {
      cet::cmd_cluster(clu);
    } else if (*c_dens) {
      cet::cmd_ref_density(dens);
    } else if (*c_swp) {
      cet::cmd_ref_sweep(swp);
    } else if (*c_bias) {
      cet::cmd_bias(bias);
    }
    return kOk;
  } catch (const cet::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kBadInput;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kBadInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumerical;
  }
}
