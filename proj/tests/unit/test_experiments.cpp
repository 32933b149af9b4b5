#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bootdqn/error.hpp"
#include "bootdqn/experiments.hpp"
#include "bootdqn/results.hpp"

using namespace bootdqn;
using namespace bootdqn::harness;
namespace fs = std::filesystem;

#ifndef BOOTDQN_TEST_DATA_DIR
#define BOOTDQN_TEST_DATA_DIR "."
#endif

namespace {

ExperimentConfig tiny_chain_config() {
  ExperimentConfig c;
  c.chain_lengths = {4, 5};
  c.episodes = 30;
  c.seeds = {0, 1};
  c.hyper.num_heads = 3;
  c.jobs = 1;
  return c;
}

bool same_records(const RunRecord& a, const RunRecord& b) {
  return a.label == b.label && a.returns == b.returns && a.cum_regret == b.cum_regret &&
         a.active_metric == b.active_metric && a.learned == b.learned && a.config_hash == b.config_hash;
}

}  // namespace

TEST_CASE("config validation") {
  auto c = tiny_chain_config();
  CHECK_NOTHROW(c.validate());
  c.seeds = {1, 1};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_chain_config();
  c.chain_lengths.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_chain_config();
  c.episodes = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(experiment_kind_from_string("atari"), ConfigError);
}

TEST_CASE("chain scaling: records, lower bounds and determinism") {
  const auto c = tiny_chain_config();
  const auto a = run_chain_scaling(c);
  REQUIRE(a.runs.size() == 4);
  for (const auto& r : a.runs) {
    CHECK(r.returns.size() == 30);
    CHECK(r.cum_regret.size() == 30);
    CHECK(r.active_metric.size() == 30);
    for (std::size_t i = 1; i < r.cum_regret.size(); ++i) CHECK(r.cum_regret[i] >= r.cum_regret[i - 1]);
    for (double h : r.active_metric) CHECK((h >= 0.0 && h < 3.0));
  }
  REQUIRE(a.summary.lower_bounds.size() == 2);
  CHECK(a.summary.lower_bounds[0].second == dithering_lower_bound(4));
  CHECK(a.summary.cells.size() == 2);

  auto reordered = c;
  reordered.chain_lengths = {5, 4};
  reordered.seeds = {1, 0};
  reordered.jobs = 2;
  const auto b = run_chain_scaling(reordered);
  for (const auto& r : a.runs) {
    bool found = false;
    for (const auto& s : b.runs) found = found || (s.label == r.label && same_records(r, s));
    CHECK(found);
  }
}

TEST_CASE("a run's streams do not depend on the episode budget") {
  auto c = tiny_chain_config();
  c.chain_lengths = {4};
  c.seeds = {3};
  const auto short_run = run_chain_scaling(c);
  c.episodes = 45;
  const auto long_run = run_chain_scaling(c);
  const auto& s = short_run.runs[0].returns;
  const auto& l = long_run.runs[0].returns;
  CHECK(std::equal(s.begin(), s.end(), l.begin()));
}

TEST_CASE("boot_dqn learns the N=10 chain for every seed") {
  ExperimentConfig c;
  c.chain_lengths = {10};
  c.episodes = 2000;
  c.stop_when_learned = true;
  const auto res = run_chain_scaling(c);
  for (const auto& r : res.runs) CHECK_FALSE(r.learned.censored);
}

TEST_CASE("sensitivity sweeps K and p") {
  ExperimentConfig c;
  c.kind = ExperimentKind::sensitivity;
  c.chain_lengths = {4};
  c.episodes = 5;
  c.seeds = {0};
  c.sweep_heads = {1, 2};
  c.sweep_p = {0.5, 1.0};
  const auto res = run_sensitivity(c);
  CHECK(res.summary.cells.size() == 4);
  CHECK(res.runs.size() == 4);
}

TEST_CASE("regret experiment: curves per algorithm, oracle agent has zero mean regret") {
  ExperimentConfig c;
  c.kind = ExperimentKind::regret;
  c.episodes = 300;
  c.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  c.include_boot_dqn = false;
  c.tabular_algorithms = {TabularAlgorithm::optimal, TabularAlgorithm::psrl};
  const auto res = run_regret_experiment(c);
  REQUIRE(res.summary.regret_curves.size() == 2);
  const auto& oracle = res.summary.regret_curves[0];
  CHECK(oracle.agent == "optimal");
  CHECK(oracle.mean.size() == 300);
  CHECK(std::abs(oracle.mean.back()) <= 2.0 * oracle.standard_error.back() + 1e-12);
  CHECK(res.runs.size() == 20);
}

TEST_CASE("regression: bootstrap cardinality and the degenerate ensemble") {
  ExperimentConfig c;
  c.kind = ExperimentKind::regression;
  c.regression.num_nets = 4;
  c.regression.iterations = 200;
  const auto res = run_regression_experiment(c, 0);
  CHECK(res.grid.size() == 201);
  CHECK(res.grid.front() == 0.0);
  CHECK(res.grid.back() == 1.0);
  for (const auto& r : res.resamples) CHECK(r.size() == 20);

  c.regression.bootstrap = false;
  c.regression.shared_init = true;
  const auto flat = run_regression_experiment(c, 0);
  for (double s : flat.sd) CHECK(s == 0.0);
}

TEST_CASE("mask diagnostics") {
  ExperimentConfig c;
  c.kind = ExperimentKind::mask_diagnostics;
  const auto stats = run_mask_diagnostics(c, 0);
  for (const auto& s : stats) {
    CHECK(s.samples == 100000);
    CHECK(s.support_ok);
    if (s.law == "bernoulli(0.5)") CHECK(std::abs(s.mean - 0.5) <= 0.005);
    if (s.law == "poisson1") CHECK(std::abs(s.variance - 1.0) <= 0.03);
    if (s.law == "exponential1") CHECK(std::abs(s.tail_above_3 - std::exp(-3.0)) <= 0.005);
  }
}

TEST_CASE("golden run: summary schema and CSV bytes") {
  ExperimentConfig c;
  c.chain_lengths = {4};
  c.episodes = 25;
  c.seeds = {0};
  c.hyper.num_heads = 2;
  const auto res = run_chain_scaling(c);
  std::ostringstream csv;
  write_run_csv(csv, res.runs[0]);
  const fs::path golden = fs::path(BOOTDQN_TEST_DATA_DIR) / "golden_chain_N4_seed0.csv";
  std::ifstream in(golden);
  REQUIRE(in.good());
  std::stringstream expect;
  expect << in.rdbuf();
  CHECK(csv.str() == expect.str());

  const auto j = nlohmann::json::parse(summary_json(res.summary, res.runs));
  for (const char* key : {"version", "kind", "config", "budget", "optimal_return", "lower_bounds", "cells", "runs"}) {
    CHECK(j.contains(key));
  }
  const auto& cell = j["cells"][0];
  for (const char* key : {"agent", "n", "k", "p", "seeds", "time_to_learn", "censored", "median", "median_censored",
                          "lower_bound", "below_lower_bound", "failed_runs"}) {
    CHECK(cell.contains(key));
  }
  CHECK(j["config"].is_object());
  CHECK(j["lower_bounds"][0]["value"] == dithering_lower_bound(4));
}
