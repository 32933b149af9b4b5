#include "bootdqn/agents.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "bootdqn/error.hpp"

namespace bootdqn {

namespace {

Hyperparams validated(Hyperparams h) {
  h.validate();
  return h;
}

NetShape with_heads(NetShape shape, std::size_t k) {
  shape.num_heads = k;
  return shape;
}

}  // namespace

double q_target_ddqn(double reward, bool terminal, std::span<const double> q_online_next,
                     std::span<const double> q_target_next, double gamma) {
  if (!std::isfinite(reward)) throw TrainingError("non-finite reward in target");
  if (terminal) return reward;
  if (q_online_next.size() != q_target_next.size() || q_online_next.empty()) {
    throw UsageError("q_target_ddqn: online and target value vectors differ in length");
  }
  for (std::size_t i = 0; i < q_online_next.size(); ++i) {
    if (!std::isfinite(q_online_next[i]) || !std::isfinite(q_target_next[i])) {
      throw TrainingError("non-finite next-state value in target");
    }
  }
  const auto best = static_cast<std::size_t>(argmax_lowest(q_online_next));
  return reward + gamma * q_target_next[best];
}

std::string to_string(AgentVariant v) {
  switch (v) {
    case AgentVariant::boot_dqn: return "boot_dqn";
    case AgentVariant::eps_greedy_dqn: return "eps_greedy_dqn";
    case AgentVariant::thompson_per_step: return "thompson_per_step";
    case AgentVariant::ensemble_vote: return "ensemble_vote";
  }
  return "unknown";
}

AgentVariant agent_variant_from_string(const std::string& name) {
  if (name == "boot_dqn" || name == "bootstrapped") return AgentVariant::boot_dqn;
  if (name == "eps_greedy_dqn" || name == "eps_greedy" || name == "dqn") return AgentVariant::eps_greedy_dqn;
  if (name == "thompson_per_step" || name == "thompson") return AgentVariant::thompson_per_step;
  if (name == "ensemble_vote" || name == "ensemble") return AgentVariant::ensemble_vote;
  throw ConfigError("unknown agent variant '" + name + "'");
}

double EpsilonSchedule::at(std::int64_t step) const {
  if (step >= anneal_steps) return end;
  const double frac = static_cast<double>(std::max<std::int64_t>(step, 0)) / static_cast<double>(anneal_steps);
  return start + (end - start) * frac;
}

void Hyperparams::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0,1]");
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (target_sync_period < 1) throw ConfigError("target sync period must be >= 1");
  if (num_heads < 1) throw ConfigError("K must be >= 1");
  mask.validate();
  if (epsilon.start < 0.0 || epsilon.start > 1.0 || epsilon.end < 0.0 || epsilon.end > 1.0) {
    throw ConfigError("epsilon schedule endpoints must lie in [0,1]");
  }
  if (epsilon.anneal_steps < 1) throw ConfigError("epsilon anneal_steps must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (replay_capacity < 1) throw ConfigError("replay capacity must be >= 1");
  if (train_every < 1) throw ConfigError("train_every must be >= 1");
}

std::optional<std::size_t> begin_episode(AgentVariant variant, std::size_t num_heads, Rng& rng) {
  if (num_heads == 0) throw ConfigError("begin_episode: K must be >= 1");
  switch (variant) {
    case AgentVariant::boot_dqn:
      return std::uniform_int_distribution<std::size_t>(0, num_heads - 1)(rng);
    case AgentVariant::eps_greedy_dqn:
      return 0;
    case AgentVariant::thompson_per_step:
    case AgentVariant::ensemble_vote:
      return std::nullopt;
  }
  return std::nullopt;
}

int argmax_random_tie(std::span<const double> values, Rng& rng) {
  if (values.empty()) throw UsageError("argmax of an empty vector");
  const double best = *std::max_element(values.begin(), values.end());
  std::size_t ties = 0;
  for (double v : values) ties += (v == best);
  if (ties == 1) {
    return static_cast<int>(std::find(values.begin(), values.end(), best) - values.begin());
  }
  auto pick = std::uniform_int_distribution<std::size_t>(0, ties - 1)(rng);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == best && pick-- == 0) return static_cast<int>(i);
  }
  return 0;
}

int argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw UsageError("argmax of an empty vector");
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

int ensemble_vote(const QMatrix& q) {
  if (q.rows == 0 || q.cols == 0) throw UsageError("ensemble_vote: empty value matrix");
  std::vector<int> votes(q.cols, 0);
  std::vector<double> summed(q.cols, 0.0);
  for (std::size_t k = 0; k < q.rows; ++k) {
    ++votes[static_cast<std::size_t>(argmax_lowest(q.row(k)))];
    for (std::size_t a = 0; a < q.cols; ++a) summed[a] += q(k, a);
  }
  std::size_t best = 0;
  for (std::size_t a = 1; a < q.cols; ++a) {
    if (votes[a] > votes[best] || (votes[a] == votes[best] && summed[a] > summed[best])) best = a;
  }
  return static_cast<int>(best);
}

int select_action(AgentVariant variant, const MultiHeadNet& net, std::optional<std::size_t> active_head,
                  std::span<const double> features, std::int64_t step, Rng& rng,
                  const Hyperparams& hyper) {
  switch (variant) {
    case AgentVariant::boot_dqn:
      if (!active_head) throw UsageError("select_action: boot_dqn needs begin_episode first");
      return argmax_random_tie(net.q_values(features, *active_head), rng);
    case AgentVariant::eps_greedy_dqn: {
      const double eps = hyper.epsilon.at(step);
      if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < eps) {
        return static_cast<int>(std::uniform_int_distribution<std::size_t>(0, net.num_actions() - 1)(rng));
      }
      return argmax_random_tie(net.q_values(features, active_head.value_or(0)), rng);
    }
    case AgentVariant::thompson_per_step: {
      const auto k = std::uniform_int_distribution<std::size_t>(0, net.num_heads() - 1)(rng);
      return argmax_random_tie(net.q_values(features, k), rng);
    }
    case AgentVariant::ensemble_vote:
      return ensemble_vote(net.all_q_values(features));
  }
  return 0;
}

DqnAgent::DqnAgent(AgentVariant variant, NetShape shape, Hyperparams hyper, std::uint64_t seed)
    : variant_(variant),
      hyper_(validated(std::move(hyper))),
      net_(with_heads(std::move(shape), hyper_.num_heads), derive_seed({seed, 0})),
      target_(make_target(net_)),
      opt_(make_optimizer(net_, hyper_.optimizer)),
      buffer_(hyper_.replay_capacity, hyper_.num_heads),
      act_rng_(make_rng(derive_seed({seed, 1}))),
      replay_rng_(make_rng(derive_seed({seed, 2}))),
      mask_rng_(make_rng(derive_seed({seed, 3}))) {}

void DqnAgent::begin_episode() { active_head_ = bootdqn::begin_episode(variant_, net_.num_heads(), act_rng_); }

int DqnAgent::act(std::span<const double> features) {
  return select_action(variant_, net_, active_head_, features, steps_, act_rng_, hyper_);
}

std::optional<TrainStats> DqnAgent::observe(std::span<const double> features, int action, double reward,
                                            std::span<const double> next_features, bool terminal) {
  Transition t{{features.begin(), features.end()},
               action,
               reward,
               {next_features.begin(), next_features.end()},
               terminal,
               sample_mask(hyper_.mask, hyper_.num_heads, mask_rng_)};
  buffer_.append(std::move(t));
  ++steps_;
  std::optional<TrainStats> stats;
  if (steps_ % static_cast<std::int64_t>(hyper_.train_every) == 0) stats = train_step();
  if (steps_ % hyper_.target_sync_period == 0) sync_target(net_, target_, steps_);
  return stats;
}

std::optional<TrainStats> DqnAgent::train_step() {
  if (buffer_.empty()) return std::nullopt;
  const auto batch = buffer_.sample_pointers(hyper_.batch_size, replay_rng_);
  TrainHyper th{hyper_.gamma, hyper_.grad_normalize_trunk};
  return masked_train_step(net_, target_, opt_, batch, th);
}

}  // namespace bootdqn
