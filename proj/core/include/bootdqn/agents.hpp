#pragma once

// Acting policies over a MultiHeadNet and the DQN learner that owns it.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "bootdqn/heads.hpp"
#include "bootdqn/nn.hpp"
#include "bootdqn/replay.hpp"
#include "bootdqn/rng.hpp"
#include "bootdqn/td_target.hpp"

namespace bootdqn {

enum class AgentVariant { boot_dqn, eps_greedy_dqn, thompson_per_step, ensemble_vote };

std::string to_string(AgentVariant v);
AgentVariant agent_variant_from_string(const std::string& name);

// Linear anneal from start to end over anneal_steps, then constant.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.1;
  std::int64_t anneal_steps = 1000;

  double at(std::int64_t step) const;
};

struct Hyperparams {
  double gamma = 0.99;
  nn::RmsPropConfig optimizer{0.95, 3e-4, 1e-8};
  std::int64_t target_sync_period = 25;  // tau, in environment steps
  std::size_t num_heads = 10;
  MaskDistribution mask = MaskDistribution::bernoulli(0.5);
  EpsilonSchedule epsilon{};
  std::size_t batch_size = 32;
  bool grad_normalize_trunk = true;
  std::size_t replay_capacity = 10000;
  std::size_t train_every = 1;  // environment steps between minibatch updates

  void validate() const;
};

// Head used for acting this episode: uniform for boot_dqn, head 0 for
// eps_greedy_dqn, none for the per-step variants.
std::optional<std::size_t> begin_episode(AgentVariant variant, std::size_t num_heads, Rng& rng);

// Greedy index with ties broken uniformly at random.
int argmax_random_tie(std::span<const double> values, Rng& rng);
// Greedy index with ties broken towards the lowest index.
int argmax_lowest(std::span<const double> values);

// Plurality vote over per-head argmaxes (lowest index within a head). Vote
// ties go to the largest summed Q across heads, then the lowest index.
int ensemble_vote(const QMatrix& q);

int select_action(AgentVariant variant, const MultiHeadNet& net, std::optional<std::size_t> active_head,
                  std::span<const double> features, std::int64_t step, Rng& rng,
                  const Hyperparams& hyper);

// A DQN learner: online/target nets, optimizer, replay buffer and the rng
// streams for acting, masks and minibatch sampling.
//
// Seeding contract (relied upon by reference implementations in tests):
//   init     derive_seed({seed, 0})  -> MultiHeadNet seed
//   acting   make_rng(derive_seed({seed, 1}))
//   replay   make_rng(derive_seed({seed, 2}))
//   masks    make_rng(derive_seed({seed, 3}))
class DqnAgent {
 public:
  DqnAgent(AgentVariant variant, NetShape shape, Hyperparams hyper, std::uint64_t seed);

  void begin_episode();
  int act(std::span<const double> features);
  // Records the transition with a freshly drawn mask, then trains on the
  // configured cadence and syncs the target every tau steps.
  std::optional<TrainStats> observe(std::span<const double> features, int action, double reward,
                                    std::span<const double> next_features, bool terminal);

  // One masked minibatch update; nullopt when the buffer is still empty.
  std::optional<TrainStats> train_step();

  AgentVariant variant() const { return variant_; }
  const Hyperparams& hyper() const { return hyper_; }
  const MultiHeadNet& net() const { return net_; }
  MultiHeadNet& net() { return net_; }
  const TargetNet& target() const { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::int64_t steps() const { return steps_; }
  std::optional<std::size_t> active_head() const { return active_head_; }

 private:
  AgentVariant variant_;
  Hyperparams hyper_;
  MultiHeadNet net_;
  TargetNet target_;
  MultiHeadOptimizer opt_;
  ReplayBuffer buffer_;
  Rng act_rng_;
  Rng replay_rng_;
  Rng mask_rng_;
  std::int64_t steps_ = 0;
  std::optional<std::size_t> active_head_;
};

}  // namespace bootdqn
