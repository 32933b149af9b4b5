// Command-line harness: chain-scaling, regret, regression, masks, sensitivity.
//
// Every flag may also be given in a plain "key = value" file via --config;
// command-line values win over the file.

#include <cstdio>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bootdqn/error.hpp"
#include "bootdqn/experiments.hpp"
#include "bootdqn/results.hpp"

namespace {

using namespace bootdqn;
using namespace bootdqn::harness;

struct Options {
  std::vector<std::string> agents;
  std::vector<int> chain_lengths;
  std::int64_t episodes = 2000;
  std::vector<std::uint64_t> seeds;
  std::size_t heads = 10;
  double p = 0.5;
  std::string mask_dist = "bernoulli";
  std::string encoding = "thermometer";
  std::string grad_norm = "on";
  std::string out;
  unsigned jobs = 0;
  double lr = Hyperparams{}.optimizer.learning_rate;
  double rms_decay = Hyperparams{}.optimizer.decay;
  double gamma = Hyperparams{}.gamma;
  std::int64_t tau = Hyperparams{}.target_sync_period;
  std::size_t batch = Hyperparams{}.batch_size;
  std::size_t replay = Hyperparams{}.replay_capacity;
  std::size_t train_every = Hyperparams{}.train_every;
  std::vector<std::size_t> head_hidden{16};
  std::vector<std::size_t> trunk_hidden;
  std::vector<std::size_t> sweep_k;
  std::vector<double> sweep_p;
  int slip_n = 6;
  std::vector<std::string> tabular;
  bool stop_when_learned = false;
  std::size_t reg_nets = RegressionSettings{}.num_nets;
  std::size_t reg_iterations = RegressionSettings{}.iterations;
  std::uint64_t data_seed = 0;
  std::size_t mask_samples = 100000;
};

bool parse_switch(const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected on/off, got '" + v + "'");
}

TabularAlgorithm tabular_from_string(const std::string& s) {
  if (s == "psrl") return TabularAlgorithm::psrl;
  if (s == "ucrl2") return TabularAlgorithm::ucrl2;
  if (s == "eps_greedy_q" || s == "eps_greedy" || s == "q_learning") return TabularAlgorithm::eps_greedy_q;
  if (s == "optimal") return TabularAlgorithm::optimal;
  throw ConfigError("unknown tabular algorithm '" + s + "'");
}

ExperimentConfig build_config(ExperimentKind kind, const Options& o) {
  ExperimentConfig c;
  c.kind = kind;
  if (!o.agents.empty()) {
    c.agents.clear();
    for (const auto& a : o.agents) c.agents.push_back(agent_variant_from_string(a));
  }
  if (!o.chain_lengths.empty()) {
    c.chain_lengths = o.chain_lengths;
  } else if (kind == ExperimentKind::sensitivity) {
    c.chain_lengths = {20};
  }
  c.episodes = o.episodes;
  if (!o.seeds.empty()) {
    c.seeds = o.seeds;
  } else if (kind == ExperimentKind::regret) {
    c.seeds.resize(10);
    std::iota(c.seeds.begin(), c.seeds.end(), std::uint64_t{0});
  }
  c.hyper.num_heads = o.heads;
  c.hyper.mask = mask_from_string(o.mask_dist, o.p);
  c.hyper.grad_normalize_trunk = parse_switch(o.grad_norm);
  c.hyper.optimizer.learning_rate = o.lr;
  c.hyper.optimizer.decay = o.rms_decay;
  c.hyper.gamma = o.gamma;
  c.hyper.target_sync_period = o.tau;
  c.hyper.batch_size = o.batch;
  c.hyper.replay_capacity = o.replay;
  c.hyper.train_every = o.train_every;
  c.encoding = envs::encoding_from_string(o.encoding);
  c.head_hidden = o.head_hidden;
  c.trunk_hidden = o.trunk_hidden;
  if (!o.sweep_k.empty()) c.sweep_heads = o.sweep_k;
  if (!o.sweep_p.empty()) c.sweep_p = o.sweep_p;
  c.slip_chain_length = o.slip_n;
  if (!o.tabular.empty()) {
    c.tabular_algorithms.clear();
    for (const auto& t : o.tabular) {
      if (t == "none") continue;
      c.tabular_algorithms.push_back(tabular_from_string(t));
    }
  }
  c.stop_when_learned = o.stop_when_learned;
  c.regression.num_nets = o.reg_nets;
  c.regression.iterations = o.reg_iterations;
  c.mask_samples = o.mask_samples;
  c.jobs = o.jobs;
  c.output_path = o.out.empty() ? "results/" + to_string(kind) : o.out;
  c.validate();
  return c;
}

void print_cells(const SummaryRecord& s) {
  std::printf("%-18s %4s %4s %6s %10s %12s\n", "agent", "N", "K", "p", "median", "lower_bound");
  for (const auto& c : s.cells) {
    std::printf("%-18s %4d %4zu %6.2f %9.1f%s %12.1f\n", c.agent.c_str(), c.chain_length, c.num_heads, c.mask_p,
                c.median.value, c.median.censored ? "+" : " ", c.lower_bound);
  }
}

int run(ExperimentKind kind, const Options& o) {
  const auto config = build_config(kind, o);
  switch (kind) {
    case ExperimentKind::chain_scaling:
    case ExperimentKind::sensitivity: {
      const auto result = kind == ExperimentKind::sensitivity ? run_sensitivity(config) : run_chain_scaling(config);
      emit_results(result, config.output_path);
      print_cells(result.summary);
      break;
    }
    case ExperimentKind::regret: {
      const auto result = run_regret_experiment(config);
      emit_results(result, config.output_path);
      std::printf("optimal return %.6f\n", result.summary.optimal_return);
      for (const auto& c : result.summary.regret_curves) {
        std::printf("%-14s cumulative regret at %lld: %.3f +- %.3f\n", c.agent.c_str(),
                    static_cast<long long>(c.mean.size()), c.mean.empty() ? 0.0 : c.mean.back(),
                    c.standard_error.empty() ? 0.0 : c.standard_error.back());
      }
      break;
    }
    case ExperimentKind::regression: {
      const auto result = run_regression_experiment(config, o.data_seed);
      emit_regression(result, config, config.output_path);
      std::printf("nets kept %zu, diverged %zu\n", result.predictions.size(), result.diverged);
      break;
    }
    case ExperimentKind::mask_diagnostics: {
      const auto stats = run_mask_diagnostics(config, o.data_seed);
      emit_mask_diagnostics(stats, config, config.output_path);
      for (const auto& s : stats) {
        std::printf("%-16s mean %.4f (theory %.4f)  var %.4f (theory %.4f)  P(>3) %.4f\n", s.law.c_str(), s.mean,
                    s.theory_mean, s.variance, s.theory_variance, s.tail_above_3);
      }
      break;
    }
  }
  std::printf("results written to %s\n", config.output_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bootstrapped DQN chain, regret and uncertainty experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read flags from a key = value file");

  Options o;
  app.add_option("--agent", o.agents, "boot_dqn, eps_greedy_dqn, thompson_per_step, ensemble_vote")->delimiter(',');
  app.add_option("--n", o.chain_lengths, "Chain length (repeatable)")->delimiter(',');
  app.add_option("--episodes", o.episodes, "Episode budget per run");
  app.add_option("--seeds", o.seeds, "Comma-separated seeds")->delimiter(',');
  app.add_option("--k", o.heads, "Number of bootstrap heads");
  app.add_option("--p", o.p, "Bernoulli mask probability");
  app.add_option("--mask-dist", o.mask_dist, "bernoulli, poisson1, exponential1, all_ones");
  app.add_option("--encoding", o.encoding, "thermometer or one_hot");
  app.add_option("--grad-norm", o.grad_norm, "Scale trunk gradients by 1/K (on/off)");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--jobs", o.jobs, "Worker threads (0: all cores)");
  app.add_option("--lr", o.lr, "RMSProp learning rate");
  app.add_option("--rms-decay", o.rms_decay, "RMSProp decay");
  app.add_option("--gamma", o.gamma, "Discount factor");
  app.add_option("--tau", o.tau, "Target sync period in steps");
  app.add_option("--batch", o.batch, "Minibatch size");
  app.add_option("--replay", o.replay, "Replay capacity");
  app.add_option("--train-every", o.train_every, "Environment steps between minibatch updates");
  app.add_option("--head-hidden", o.head_hidden, "Hidden widths of each head")->delimiter(',');
  app.add_option("--trunk-hidden", o.trunk_hidden, "Hidden widths of the shared trunk")->delimiter(',');
  app.add_option("--sweep-k", o.sweep_k, "Sensitivity: head counts")->delimiter(',');
  app.add_option("--sweep-p", o.sweep_p, "Sensitivity: mask probabilities")->delimiter(',');
  app.add_option("--slip-n", o.slip_n, "Regret: slip chain length");
  app.add_option("--tabular", o.tabular, "Regret: psrl, ucrl2, eps_greedy_q, optimal, none")->delimiter(',');
  app.add_flag("--stop-when-learned", o.stop_when_learned, "Stop chain runs once learned");
  app.add_option("--reg-nets", o.reg_nets, "Regression: ensemble size");
  app.add_option("--reg-iterations", o.reg_iterations, "Regression: full-batch steps per net");
  app.add_option("--data-seed", o.data_seed, "Regression data / mask sampling seed");
  app.add_option("--mask-samples", o.mask_samples, "Mask diagnostics: samples per law");

  const std::vector<std::pair<std::string, ExperimentKind>> commands{
      {"chain-scaling", ExperimentKind::chain_scaling},
      {"regret", ExperimentKind::regret},
      {"regression", ExperimentKind::regression},
      {"masks", ExperimentKind::mask_diagnostics},
      {"sensitivity", ExperimentKind::sensitivity}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, kind] : commands) subs.push_back(app.add_subcommand(name, "Run the " + name + " experiment"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cout << error_json("usage_error", e.what()) << std::endl;
    return 2;
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) return run(commands[i].second, o);
    }
  } catch (const bootdqn::Error& e) {
    std::cout << error_json(e.kind(), e.what()) << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cout << error_json("internal_error", e.what()) << std::endl;
    return 1;
  }
  return 1;
}
