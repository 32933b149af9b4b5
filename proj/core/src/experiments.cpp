#include "bootdqn/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "bootdqn/error.hpp"
#include "bootdqn/tabular.hpp"

namespace bootdqn::harness {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string mask_label(const MaskDistribution& m) {
  std::ostringstream os;
  os << m.name();
  if (m.kind == MaskKind::bernoulli) os << '(' << m.p << ')';
  return os.str();
}

std::string chain_identity(const envs::ChainSpec& c) {
  std::ostringstream os;
  os.precision(17);
  os << "chain n=" << c.n << " horizon=" << c.horizon << " encoding=" << envs::to_string(c.encoding)
     << " small=" << c.small_reward << " big=" << c.big_reward << " start=" << c.start_state << " slip=" << c.slip;
  return os.str();
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<double> regret_of(const std::vector<double>& returns, double optimal) {
  std::vector<double> per_episode;
  per_episode.reserve(returns.size());
  for (double r : returns) per_episode.push_back(tabular::episode_regret(optimal, r));
  return cumulative_sum(per_episode);
}

unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string cell_key(const std::string& agent, int n, std::size_t k, double p) {
  std::ostringstream os;
  os.precision(17);
  os << agent << '|' << n << '|' << k << '|' << p;
  return os.str();
}

// Groups run records into summary cells keyed by (agent, N, K, p) in first-seen order.
std::vector<SummaryCell> summarize_cells(const std::vector<RunRecord>& runs, const std::vector<double>& mask_ps,
                                         std::int64_t budget) {
  std::vector<SummaryCell> cells;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    const auto key = cell_key(r.agent, r.chain_length, r.num_heads, mask_ps[i]);
    auto [it, inserted] = index.emplace(key, cells.size());
    if (inserted) {
      SummaryCell cell;
      cell.agent = r.agent;
      cell.chain_length = r.chain_length;
      cell.num_heads = r.num_heads;
      cell.mask_p = mask_ps[i];
      cell.lower_bound = dithering_lower_bound(r.chain_length);
      cells.push_back(cell);
    }
    auto& cell = cells[it->second];
    cell.seeds.push_back(r.seed);
    cell.runs.push_back(r.failed ? TimeToLearn{budget, true} : r.learned);
    cell.failed_runs += r.failed ? 1 : 0;
  }
  for (auto& cell : cells) cell.median = median_time_to_learn(cell.runs);
  return cells;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::chain_scaling: return "chain_scaling";
    case ExperimentKind::regret: return "regret";
    case ExperimentKind::regression: return "regression";
    case ExperimentKind::mask_diagnostics: return "mask_diagnostics";
    case ExperimentKind::sensitivity: return "sensitivity";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "chain_scaling" || name == "chain-scaling") return ExperimentKind::chain_scaling;
  if (name == "regret") return ExperimentKind::regret;
  if (name == "regression") return ExperimentKind::regression;
  if (name == "mask_diagnostics" || name == "masks") return ExperimentKind::mask_diagnostics;
  if (name == "sensitivity") return ExperimentKind::sensitivity;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string to_string(TabularAlgorithm a) {
  switch (a) {
    case TabularAlgorithm::psrl: return "psrl";
    case TabularAlgorithm::ucrl2: return "ucrl2";
    case TabularAlgorithm::eps_greedy_q: return "eps_greedy_q";
    case TabularAlgorithm::optimal: return "optimal";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  hyper.validate();
  if (episodes < 1) throw ConfigError("episode budget must be >= 1");
  if (seeds.empty()) throw ConfigError("seed list is empty");
  auto sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ConfigError("seeds must be distinct");
  if (head_hidden.empty()) throw ConfigError("head needs at least one hidden layer width");
  for (auto w : head_hidden) if (w == 0) throw ConfigError("hidden widths must be positive");
  for (auto w : trunk_hidden) if (w == 0) throw ConfigError("hidden widths must be positive");
  switch (kind) {
    case ExperimentKind::chain_scaling:
      if (agents.empty()) throw ConfigError("agent list is empty");
      [[fallthrough]];
    case ExperimentKind::sensitivity:
      if (chain_lengths.empty()) throw ConfigError("chain length list is empty");
      for (int n : chain_lengths) if (n < 3) throw ConfigError("chain lengths must be >= 3");
      if (kind == ExperimentKind::sensitivity && (sweep_heads.empty() || sweep_p.empty())) {
        throw ConfigError("sensitivity sweep lists are empty");
      }
      for (double p : sweep_p) if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("sweep p outside [0,1]");
      for (auto k : sweep_heads) if (k == 0) throw ConfigError("sweep K must be >= 1");
      break;
    case ExperimentKind::regret:
      if (slip_chain_length < 3) throw ConfigError("slip chain length must be >= 3");
      if (tabular_algorithms.empty() && !include_boot_dqn) throw ConfigError("no algorithms selected");
      if (!(ucrl2_delta > 0.0 && ucrl2_delta < 1.0)) throw ConfigError("ucrl2 delta must lie in (0,1)");
      if (!(q_learning_epsilon >= 0.0 && q_learning_epsilon <= 1.0)) throw ConfigError("q-learning epsilon outside [0,1]");
      break;
    case ExperimentKind::regression:
      if (regression.num_nets == 0 || regression.num_points == 0 || regression.grid_points < 2 ||
          regression.iterations == 0) {
        throw ConfigError("regression settings must be positive (grid >= 2)");
      }
      break;
    case ExperimentKind::mask_diagnostics:
      if (mask_samples < 2) throw ConfigError("mask diagnostics need at least 2 samples");
      break;
  }
}

std::string ExperimentConfig::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "kind = " << to_string(kind) << '\n';
  os << "agent = ";
  for (std::size_t i = 0; i < agents.size(); ++i) os << (i ? "," : "") << to_string(agents[i]);
  os << "\nn = ";
  for (std::size_t i = 0; i < chain_lengths.size(); ++i) os << (i ? "," : "") << chain_lengths[i];
  os << "\nepisodes = " << episodes << "\nseeds = ";
  for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
  os << "\nk = " << hyper.num_heads << "\nmask-dist = " << hyper.mask.name() << "\np = " << hyper.mask.p
     << "\nencoding = " << envs::to_string(encoding) << "\ngrad-norm = " << (hyper.grad_normalize_trunk ? "on" : "off")
     << "\ngamma = " << hyper.gamma << "\nlr = " << hyper.optimizer.learning_rate
     << "\nrms-decay = " << hyper.optimizer.decay << "\nrms-eps = " << hyper.optimizer.epsilon
     << "\ntau = " << hyper.target_sync_period << "\nbatch = " << hyper.batch_size
     << "\nreplay = " << hyper.replay_capacity << "\ntrain-every = " << hyper.train_every
     << "\neps-start = " << hyper.epsilon.start << "\neps-end = " << hyper.epsilon.end
     << "\neps-anneal = " << hyper.epsilon.anneal_steps << "\nhead-hidden = " << join_sizes(head_hidden)
     << "\ntrunk-hidden = " << join_sizes(trunk_hidden) << "\nsweep-k = " << join_sizes(sweep_heads) << "\nsweep-p = ";
  for (std::size_t i = 0; i < sweep_p.size(); ++i) os << (i ? "," : "") << sweep_p[i];
  os << "\nslip-n = " << slip_chain_length << "\ntabular = ";
  for (std::size_t i = 0; i < tabular_algorithms.size(); ++i) os << (i ? "," : "") << to_string(tabular_algorithms[i]);
  os << "\nboot-dqn-regret = " << (include_boot_dqn ? "on" : "off") << "\nucrl2-delta = " << ucrl2_delta
     << "\nq-epsilon = " << q_learning_epsilon << "\nreg-nets = " << regression.num_nets
     << "\nreg-points = " << regression.num_points << "\nreg-grid = " << regression.grid_points
     << "\nreg-hidden = " << join_sizes(regression.hidden) << "\nreg-iterations = " << regression.iterations
     << "\nreg-lr = " << regression.optimizer.learning_rate << "\nreg-bootstrap = " << (regression.bootstrap ? "on" : "off")
     << "\nreg-shared-init = " << (regression.shared_init ? "on" : "off") << "\nmask-samples = " << mask_samples
     << "\nstop-when-learned = " << (stop_when_learned ? "on" : "off") << '\n';
  return os.str();
}

std::string run_identity(const ChainRun& run) {
  const auto& h = run.hyper;
  std::ostringstream os;
  os.precision(17);
  os << to_string(run.agent) << ' ' << chain_identity(run.chain) << " K=" << h.num_heads << " mask=" << mask_label(h.mask)
     << " gamma=" << h.gamma << " lr=" << h.optimizer.learning_rate << " decay=" << h.optimizer.decay
     << " eps_stab=" << h.optimizer.epsilon << " tau=" << h.target_sync_period << " batch=" << h.batch_size
     << " replay=" << h.replay_capacity << " train_every=" << h.train_every << " eps=" << h.epsilon.start << ':'
     << h.epsilon.end << ':' << h.epsilon.anneal_steps << " norm=" << h.grad_normalize_trunk
     << " head=" << join_sizes(run.head_hidden) << " trunk=" << join_sizes(run.trunk_hidden);
  return os.str();
}

RunRecord run_chain_agent(const ChainRun& run) {
  const auto start = std::chrono::steady_clock::now();
  const std::string identity = run_identity(run);
  const std::uint64_t run_seed = derive_seed({hash_string(identity), run.seed});

  RunRecord rec;
  rec.agent = to_string(run.agent);
  rec.chain_length = run.chain.n;
  rec.seed = run.seed;
  rec.num_heads = run.hyper.num_heads;
  rec.mask = mask_label(run.hyper.mask);
  rec.optimal_return = run.chain.optimal_return;
  rec.config_hash = hex64(hash_string(identity));
  {
    std::ostringstream os;
    os << rec.agent << "_N" << run.chain.n << "_K" << rec.num_heads << '_' << run.hyper.mask.name();
    if (run.hyper.mask.kind == MaskKind::bernoulli) os << run.hyper.mask.p;
    os << "_seed" << run.seed;
    rec.label = os.str();
  }

  try {
    NetShape shape{static_cast<std::size_t>(run.chain.n), run.trunk_hidden, run.head_hidden, 2, run.hyper.num_heads};
    DqnAgent agent(run.agent, shape, run.hyper, derive_seed({run_seed, 0x41}));
    Rng env_rng = make_rng(derive_seed({run_seed, 0x45}));
    envs::ChainEnv env(run.chain);

    std::vector<std::vector<double>> features;
    for (int s = 1; s <= run.chain.n; ++s) features.push_back(envs::encode(run.chain, s));

    int successes = 0;
    rec.returns.reserve(static_cast<std::size_t>(run.episodes));
    for (std::int64_t ep = 0; ep < run.episodes; ++ep) {
      env.reset();
      agent.begin_episode();
      double ret = 0.0;
      while (!env.done()) {
        const auto& phi = features[static_cast<std::size_t>(env.state() - 1)];
        const int action = agent.act(phi);
        const auto step = env.step(action, env_rng);
        agent.observe(phi, action, step.reward, features[static_cast<std::size_t>(step.next_state - 1)], step.done);
        ret += step.reward;
      }
      rec.returns.push_back(ret);
      rec.active_metric.push_back(agent.active_head() ? static_cast<double>(*agent.active_head()) : -1.0);
      if (ret >= run.chain.optimal_return - kSuccessTolerance) ++successes;
      if (run.stop_when_learned && successes >= kEpisodesToLearn && ep + 1 < run.episodes) {
        rec.stopped_early = true;
        break;
      }
    }
  } catch (const TrainingError& e) {
    rec.failed = true;
    rec.failure = std::string(e.what()) + " (run " + rec.label + ", episode " + std::to_string(rec.returns.size() + 1) + ")";
  }
  rec.cum_regret = regret_of(rec.returns, rec.optimal_return);
  rec.learned = rec.failed ? TimeToLearn{run.episodes, true} : time_to_learn(rec.returns, rec.optimal_return, run.episodes);
  rec.wall_seconds = elapsed_seconds(start);
  return rec;
}

RunRecord run_tabular_agent(const envs::ChainSpec& chain, TabularAlgorithm algorithm, std::int64_t episodes,
                            std::uint64_t seed, double ucrl2_delta, double q_epsilon) {
  const auto start = std::chrono::steady_clock::now();
  std::ostringstream id;
  id.precision(17);
  id << "tabular " << to_string(algorithm) << ' ' << chain_identity(chain) << " delta=" << ucrl2_delta
     << " q_eps=" << q_epsilon;
  const std::uint64_t run_seed = derive_seed({hash_string(id.str()), seed});
  Rng agent_rng = make_rng(derive_seed({run_seed, 0x41}));
  Rng env_rng = make_rng(derive_seed({run_seed, 0x45}));

  const auto mdp = envs::to_tabular(chain);
  const std::size_t S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;

  RunRecord rec;
  rec.agent = to_string(algorithm);
  rec.chain_length = chain.n;
  rec.seed = seed;
  rec.optimal_return = chain.optimal_return;
  rec.mask = "none";
  rec.config_hash = hex64(hash_string(id.str()));
  rec.label = rec.agent + "_N" + std::to_string(chain.n) + "_seed" + std::to_string(seed);

  auto posterior = tabular::DirichletPosterior::prior(S, A);
  auto conf = tabular::ConfidenceSet::empty(S, A, ucrl2_delta);
  auto qtable = tabular::QTable::zeros(H, S, A);
  const auto optimal = tabular::solve_finite_horizon(mdp);
  envs::ChainEnv env(chain);
  std::vector<tabular::Step> trajectory;

  for (std::int64_t ep = 0; ep < episodes; ++ep) {
    tabular::Solution plan;
    if (algorithm == TabularAlgorithm::psrl) plan = tabular::psrl_plan(posterior, H, agent_rng);
    if (algorithm == TabularAlgorithm::ucrl2) plan = tabular::ucrl2_plan(conf, H);
    env.reset();
    trajectory.clear();
    double ret = 0.0;
    for (std::size_t h = 0; h < H; ++h) {
      const auto s = static_cast<std::size_t>(env.state() - 1);
      int a = 0;
      switch (algorithm) {
        case TabularAlgorithm::psrl:
        case TabularAlgorithm::ucrl2: a = plan.action(h, s); break;
        case TabularAlgorithm::optimal: a = optimal.action(h, s); break;
        case TabularAlgorithm::eps_greedy_q: a = tabular::epsilon_greedy_action(qtable, h, s, q_epsilon, agent_rng); break;
      }
      const auto step = env.step(a, env_rng);
      const tabular::Step st{s, static_cast<std::size_t>(a), static_cast<std::size_t>(step.next_state - 1), step.reward};
      trajectory.push_back(st);
      if (algorithm == TabularAlgorithm::ucrl2) conf.record(st);
      if (algorithm == TabularAlgorithm::eps_greedy_q) {
        const double lr = tabular::q_learning_rate(qtable.visits[qtable.index(h, s, st.action)] + 1.0);
        tabular::tabular_q_step(qtable, h, st, lr);
      }
      ret += step.reward;
    }
    if (algorithm == TabularAlgorithm::psrl) tabular::posterior_update(posterior, trajectory);
    rec.returns.push_back(ret);
    rec.active_metric.push_back(-1.0);
  }
  rec.cum_regret = regret_of(rec.returns, rec.optimal_return);
  rec.learned = time_to_learn(rec.returns, rec.optimal_return, episodes);
  rec.wall_seconds = elapsed_seconds(start);
  return rec;
}

std::vector<RunRecord> run_parallel(const std::vector<std::function<RunRecord()>>& tasks, unsigned jobs) {
  std::vector<RunRecord> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i] = tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::min<unsigned>(resolve_jobs(jobs), static_cast<unsigned>(std::max<std::size_t>(tasks.size(), 1)));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) if (e) std::rethrow_exception(e);
  return results;
}

Hyperparams hyper_for(AgentVariant agent, Hyperparams hyper) {
  if (agent == AgentVariant::eps_greedy_dqn) {
    hyper.num_heads = 1;
    hyper.mask = MaskDistribution::all_ones();
  }
  return hyper;
}

ExperimentResult run_chain_scaling(const ExperimentConfig& config) {
  config.validate();
  std::vector<std::function<RunRecord()>> tasks;
  std::vector<double> ps;
  for (auto agent : config.agents) {
    for (int n : config.chain_lengths) {
      const auto chain = envs::calibrate_chain(n, config.encoding);
      for (auto seed : config.seeds) {
        ChainRun run{chain, agent, hyper_for(agent, config.hyper), config.head_hidden, config.trunk_hidden,
                     config.episodes, seed, config.stop_when_learned};
        ps.push_back(run.hyper.mask.kind == MaskKind::bernoulli ? run.hyper.mask.p : 1.0);
        tasks.emplace_back([run] { return run_chain_agent(run); });
      }
    }
  }
  ExperimentResult result;
  result.runs = run_parallel(tasks, config.jobs);
  result.summary.kind = config.kind;
  result.summary.config_echo = config.describe();
  result.summary.budget = config.episodes;
  result.summary.cells = summarize_cells(result.runs, ps, config.episodes);
  for (int n : config.chain_lengths) result.summary.lower_bounds.emplace_back(n, dithering_lower_bound(n));
  return result;
}

ExperimentResult run_sensitivity(const ExperimentConfig& config) {
  config.validate();
  std::vector<std::function<RunRecord()>> tasks;
  std::vector<double> ps;
  for (int n : config.chain_lengths) {
    const auto chain = envs::calibrate_chain(n, config.encoding);
    for (auto k : config.sweep_heads) {
      for (double p : config.sweep_p) {
        auto hyper = config.hyper;
        hyper.num_heads = k;
        hyper.mask = MaskDistribution::bernoulli(p);
        for (auto seed : config.seeds) {
          ChainRun run{chain, AgentVariant::boot_dqn, hyper, config.head_hidden, config.trunk_hidden,
                       config.episodes, seed, config.stop_when_learned};
          tasks.emplace_back([run] { return run_chain_agent(run); });
          ps.push_back(p);
        }
      }
    }
  }
  ExperimentResult result;
  result.runs = run_parallel(tasks, config.jobs);
  result.summary.kind = config.kind;
  result.summary.config_echo = config.describe();
  result.summary.budget = config.episodes;
  result.summary.cells = summarize_cells(result.runs, ps, config.episodes);
  for (int n : config.chain_lengths) result.summary.lower_bounds.emplace_back(n, dithering_lower_bound(n));
  return result;
}

ExperimentResult run_regret_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto chain = envs::slip_chain(config.slip_chain_length, config.encoding);
  std::vector<std::function<RunRecord()>> tasks;
  std::vector<std::string> order;
  if (config.include_boot_dqn) {
    order.push_back(to_string(AgentVariant::boot_dqn));
    for (auto seed : config.seeds) {
      ChainRun run{chain, AgentVariant::boot_dqn, config.hyper, config.head_hidden, config.trunk_hidden,
                   config.episodes, seed, false};
      tasks.emplace_back([run] { return run_chain_agent(run); });
    }
  }
  for (auto algo : config.tabular_algorithms) {
    order.push_back(to_string(algo));
    for (auto seed : config.seeds) {
      tasks.emplace_back([=, &config] {
        return run_tabular_agent(chain, algo, config.episodes, seed, config.ucrl2_delta, config.q_learning_epsilon);
      });
    }
  }
  ExperimentResult result;
  result.runs = run_parallel(tasks, config.jobs);
  auto& summary = result.summary;
  summary.kind = config.kind;
  summary.config_echo = config.describe();
  summary.budget = config.episodes;
  summary.optimal_return = chain.optimal_return;
  for (const auto& agent : order) {
    RegretCurve curve;
    curve.agent = agent;
    std::vector<const RunRecord*> runs;
    for (const auto& r : result.runs) if (r.agent == agent && !r.failed) runs.push_back(&r);
    const auto len = static_cast<std::size_t>(config.episodes);
    curve.mean.assign(len, 0.0);
    curve.standard_error.assign(len, 0.0);
    if (runs.empty()) {
      summary.regret_curves.push_back(curve);
      continue;
    }
    const double m = static_cast<double>(runs.size());
    for (std::size_t e = 0; e < len; ++e) {
      double sum = 0.0, sq = 0.0;
      for (const auto* r : runs) sum += r->cum_regret[e];
      const double mean = sum / m;
      for (const auto* r : runs) sq += (r->cum_regret[e] - mean) * (r->cum_regret[e] - mean);
      curve.mean[e] = mean;
      curve.standard_error[e] = runs.size() > 1 ? std::sqrt(sq / (m - 1.0) / m) : 0.0;
    }
    summary.regret_curves.push_back(curve);
  }
  return result;
}

RegressionResult run_regression_experiment(const ExperimentConfig& config, std::uint64_t seed) {
  const auto& rs = config.regression;
  if (rs.num_nets == 0 || rs.num_points == 0 || rs.grid_points < 2 || rs.iterations == 0) {
    throw ConfigError("regression settings must be positive (grid >= 2)");
  }
  RegressionResult out;
  out.data = envs::generate_regression_data(rs.num_points, seed);
  const auto layout = nn::mlp_layout(1, rs.hidden, 1);
  Rng resample_rng = make_rng(derive_seed({seed, 0x52}));
  const std::size_t n = rs.num_points;

  for (std::size_t g = 0; g < rs.grid_points; ++g) {
    const double x = static_cast<double>(g) / static_cast<double>(rs.grid_points - 1);
    out.grid.push_back(x);
    out.truth.push_back(envs::regression_response(x, 0.0, out.data.alpha, out.data.beta));
  }

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  nn::Trace trace;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t net = 0; net < rs.num_nets; ++net) {
    std::vector<std::size_t> idx(n);
    if (rs.bootstrap) {
      for (auto& i : idx) i = pick(resample_rng);
    } else {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
    }
    out.resamples.push_back(idx);

    const auto init_seed = rs.shared_init ? derive_seed({seed, 0x49}) : derive_seed({seed, 0x49, net});
    auto params = nn::init_params(layout, init_seed);
    auto opt = nn::make_optimizer(layout, rs.optimizer);
    auto grads = nn::zero_gradients(layout);
    bool diverged = false;
    try {
      for (std::size_t it = 0; it < rs.iterations; ++it) {
        grads.set_zero();
        for (auto i : idx) {
          const double x = out.data.x[i];
          nn::forward_into(params, layout, std::span<const double>(&x, 1), trace);
          const double diff = trace.output()[0] - out.data.y[i];
          nn::backward_accumulate(params, layout, trace, std::span<const double>(&diff, 1), grads);
        }
        grads.scale(inv_n);
        nn::optimizer_step(params, grads, opt);
      }
    } catch (const TrainingError&) {
      diverged = true;
    }
    std::vector<double> pred;
    if (!diverged) {
      for (double x : out.grid) {
        nn::forward_into(params, layout, std::span<const double>(&x, 1), trace);
        const double y = trace.output()[0];
        if (!std::isfinite(y)) {
          diverged = true;
          break;
        }
        pred.push_back(y);
      }
    }
    if (diverged) {
      ++out.diverged;
      continue;
    }
    out.predictions.push_back(std::move(pred));
  }

  const std::size_t kept = out.predictions.size();
  for (std::size_t g = 0; g < rs.grid_points; ++g) {
    std::vector<double> col;
    col.reserve(kept);
    for (const auto& p : out.predictions) col.push_back(p[g]);
    std::sort(col.begin(), col.end());
    const double mean = kept ? std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(kept) : 0.0;
    double sq = 0.0;
    for (double v : col) sq += (v - mean) * (v - mean);
    out.mean.push_back(mean);
    out.sd.push_back(kept > 1 ? std::sqrt(sq / static_cast<double>(kept - 1)) : 0.0);
    out.q05.push_back(quantile_sorted(col, 0.05));
    out.q95.push_back(quantile_sorted(col, 0.95));
  }
  return out;
}

std::vector<MaskLawStats> run_mask_diagnostics(const ExperimentConfig& config, std::uint64_t seed) {
  const std::size_t n = config.mask_samples;
  if (n < 2) throw ConfigError("mask diagnostics need at least 2 samples");
  const double bern_p = config.hyper.mask.kind == MaskKind::bernoulli ? config.hyper.mask.p : 0.5;
  const std::vector<MaskDistribution> laws{MaskDistribution::bernoulli(bern_p), MaskDistribution::poisson1(),
                                           MaskDistribution::exponential1(), MaskDistribution::all_ones()};
  std::vector<MaskLawStats> out;
  for (std::size_t li = 0; li < laws.size(); ++li) {
    const auto& law = laws[li];
    Rng rng = make_rng(derive_seed({seed, 0x4d, li}));
    std::vector<double> xs;
    xs.reserve(n);
    // Draw in rows of 10 heads, as an agent with K=10 would.
    while (xs.size() < n) {
      for (double m : sample_mask(law, 10, rng)) {
        if (xs.size() < n) xs.push_back(m);
      }
    }
    MaskLawStats st;
    st.law = mask_label(law);
    st.samples = n;
    const double dn = static_cast<double>(n);
    st.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / dn;
    double sq = 0.0;
    std::size_t tail = 0;
    for (double x : xs) {
      sq += (x - st.mean) * (x - st.mean);
      tail += x > 3.0;
      switch (law.kind) {
        case MaskKind::bernoulli:
        case MaskKind::all_ones: st.support_ok = st.support_ok && (x == 0.0 || x == 1.0); break;
        case MaskKind::poisson1: st.support_ok = st.support_ok && x >= 0.0 && x == std::floor(x); break;
        case MaskKind::exponential1: st.support_ok = st.support_ok && x >= 0.0; break;
      }
      if (law.kind == MaskKind::all_ones) st.support_ok = st.support_ok && x == 1.0;
    }
    st.variance = sq / (dn - 1.0);
    st.theory_mean = law.mean();
    st.theory_variance = law.variance();
    // Fourth central moments of each law give the standard error of the sample variance.
    double mu4 = 0.0;
    switch (law.kind) {
      case MaskKind::bernoulli: {
        const double p = law.p;
        mu4 = p * (1.0 - p) * (1.0 - 3.0 * p + 3.0 * p * p);
        st.theory_tail_above_3 = 0.0;
        break;
      }
      case MaskKind::poisson1:
        mu4 = 4.0;
        st.theory_tail_above_3 = 1.0 - std::exp(-1.0) * (1.0 + 1.0 + 0.5 + 1.0 / 6.0);
        break;
      case MaskKind::exponential1:
        mu4 = 9.0;
        st.theory_tail_above_3 = std::exp(-3.0);
        break;
      case MaskKind::all_ones:
        mu4 = 0.0;
        st.theory_tail_above_3 = 0.0;
        break;
    }
    const double var = st.theory_variance;
    st.mean_standard_error = std::sqrt(var / dn);
    // Exact finite-n variance of the unbiased sample variance; the large-n
    // form (mu4 - var^2)/n vanishes for Bernoulli(0.5).
    st.variance_standard_error = std::sqrt(std::max(0.0, mu4 - var * var * (dn - 3.0) / (dn - 1.0)) / dn);
    st.tail_above_3 = static_cast<double>(tail) / dn;
    out.push_back(st);
  }
  return out;
}

}  // namespace bootdqn::harness
