#pragma once

// Experiment drivers: chain scaling, K/p sensitivity, slip-chain regret
// against tabular baselines, bootstrapped regression and mask-law checks.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bootdqn/agents.hpp"
#include "bootdqn/envs.hpp"
#include "bootdqn/metrics.hpp"

namespace bootdqn::harness {

inline constexpr const char* kVersion = "0.1.0";

enum class ExperimentKind { chain_scaling, regret, regression, mask_diagnostics, sensitivity };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& name);

// Tabular baselines of the regret experiment; boot_dqn runs alongside them.
enum class TabularAlgorithm { psrl, ucrl2, eps_greedy_q, optimal };

std::string to_string(TabularAlgorithm a);

struct RegressionSettings {
  std::size_t num_nets = 50;
  std::size_t num_points = 20;
  std::size_t grid_points = 201;
  std::vector<std::size_t> hidden{50, 50};
  std::size_t iterations = 10000;
  nn::RmsPropConfig optimizer{0.95, 1e-2, 1e-8};
  bool bootstrap = true;        // false: every net sees the full dataset
  bool shared_init = false;     // true: every net starts from the same parameters
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::chain_scaling;
  std::vector<AgentVariant> agents{AgentVariant::boot_dqn};
  std::vector<int> chain_lengths{10, 15, 20, 25, 30, 35, 40, 50};
  std::int64_t episodes = 2000;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  Hyperparams hyper{};
  envs::Encoding encoding = envs::Encoding::thermometer;
  std::vector<std::size_t> head_hidden{16};
  std::vector<std::size_t> trunk_hidden{};

  // sensitivity
  std::vector<std::size_t> sweep_heads{1, 3, 5, 10, 20};
  std::vector<double> sweep_p{0.25, 0.5, 0.75, 1.0};

  // regret
  int slip_chain_length = 6;
  std::vector<TabularAlgorithm> tabular_algorithms{TabularAlgorithm::psrl, TabularAlgorithm::ucrl2,
                                                   TabularAlgorithm::eps_greedy_q};
  bool include_boot_dqn = true;
  double ucrl2_delta = 0.05;
  double q_learning_epsilon = 0.1;

  RegressionSettings regression{};
  std::size_t mask_samples = 100000;

  // Stop a chain run once it has learned; its record is then shorter than
  // the budget and flagged.
  bool stop_when_learned = false;
  unsigned jobs = 0;  // 0: hardware concurrency
  std::string output_path;

  void validate() const;
  // Canonical "key = value" lines; stable across runs and used for hashing.
  std::string describe() const;
};

struct RunRecord {
  std::string label;
  std::string agent;
  int chain_length = 0;
  std::uint64_t seed = 0;
  std::size_t num_heads = 0;
  std::string mask;  // e.g. "bernoulli(0.5)"
  double optimal_return = 0.0;
  std::vector<double> returns;
  std::vector<double> cum_regret;
  std::vector<double> active_metric;  // acting head per episode, -1 when none
  TimeToLearn learned{};
  bool stopped_early = false;
  bool failed = false;
  std::string failure;
  double wall_seconds = 0.0;
  std::string config_hash;
};

struct SummaryCell {
  std::string agent;
  int chain_length = 0;
  std::size_t num_heads = 0;
  double mask_p = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<TimeToLearn> runs;
  MedianTimeToLearn median{};
  double lower_bound = 0.0;
  std::size_t failed_runs = 0;
};

struct RegretCurve {
  std::string agent;
  std::vector<double> mean;
  std::vector<double> standard_error;
};

struct SummaryRecord {
  ExperimentKind kind = ExperimentKind::chain_scaling;
  std::string config_echo;
  std::int64_t budget = 0;
  std::vector<SummaryCell> cells;
  std::vector<std::pair<int, double>> lower_bounds;
  std::vector<RegretCurve> regret_curves;
  double optimal_return = 0.0;
};

struct ExperimentResult {
  SummaryRecord summary;
  std::vector<RunRecord> runs;
};

struct ChainRun {
  envs::ChainSpec chain;
  AgentVariant agent = AgentVariant::boot_dqn;
  Hyperparams hyper{};
  std::vector<std::size_t> head_hidden{16};
  std::vector<std::size_t> trunk_hidden{};
  std::int64_t episodes = 2000;
  std::uint64_t seed = 0;
  bool stop_when_learned = false;
};

// Hyperparameters a chain run of `agent` actually uses: eps_greedy_dqn is a
// single all-ones head, every other variant keeps `hyper` as given.
Hyperparams hyper_for(AgentVariant agent, Hyperparams hyper);

// Identity string of one run; hashing it (with the seed) gives the run's
// rng streams, so a run's results never depend on what else is scheduled.
std::string run_identity(const ChainRun& run);

// Full training run of one DQN agent on one chain. A TrainingError marks the
// record failed instead of propagating.
RunRecord run_chain_agent(const ChainRun& run);

// Tabular baseline on a chain; agents see the true state index.
RunRecord run_tabular_agent(const envs::ChainSpec& chain, TabularAlgorithm algorithm, std::int64_t episodes,
                            std::uint64_t seed, double ucrl2_delta, double q_epsilon);

ExperimentResult run_chain_scaling(const ExperimentConfig& config);
ExperimentResult run_sensitivity(const ExperimentConfig& config);
ExperimentResult run_regret_experiment(const ExperimentConfig& config);

struct RegressionResult {
  envs::RegressionDataset data;
  std::vector<double> grid;
  std::vector<double> truth;  // noise-free generator
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> q05;
  std::vector<double> q95;
  std::vector<std::vector<double>> predictions;  // per kept net, over the grid
  std::vector<std::vector<std::size_t>> resamples;
  std::size_t diverged = 0;
};

RegressionResult run_regression_experiment(const ExperimentConfig& config, std::uint64_t seed);

struct MaskLawStats {
  std::string law;
  std::size_t samples = 0;
  double mean = 0.0;
  double variance = 0.0;
  double theory_mean = 0.0;
  double theory_variance = 0.0;
  double mean_standard_error = 0.0;
  double variance_standard_error = 0.0;
  bool support_ok = true;
  double tail_above_3 = 0.0;
  double theory_tail_above_3 = 0.0;
};

std::vector<MaskLawStats> run_mask_diagnostics(const ExperimentConfig& config, std::uint64_t seed);

// Runs independent tasks on up to `jobs` threads; results keep task order.
std::vector<RunRecord> run_parallel(const std::vector<std::function<RunRecord()>>& tasks, unsigned jobs);

}  // namespace bootdqn::harness
