#pragma once

// Exact finite-horizon MDP machinery: backward induction, posterior
// sampling (PSRL), optimistic planning (finite-horizon UCRL2), tabular
// Q-learning and regret accounting.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bootdqn/rng.hpp"

namespace bootdqn::tabular {

struct TabularMDP {
  std::size_t num_states = 1;
  std::size_t num_actions = 1;
  std::size_t horizon = 1;
  std::vector<double> transitions;  // [s][a][s']
  std::vector<double> rewards;      // expected reward, [s][a], in [0,1]
  std::size_t start_state = 0;

  static TabularMDP empty(std::size_t num_states, std::size_t num_actions, std::size_t horizon);

  double& p(std::size_t s, std::size_t a, std::size_t next) {
    return transitions[(s * num_actions + a) * num_states + next];
  }
  double p(std::size_t s, std::size_t a, std::size_t next) const {
    return transitions[(s * num_actions + a) * num_states + next];
  }
  std::span<const double> row(std::size_t s, std::size_t a) const {
    return {transitions.data() + (s * num_actions + a) * num_states, num_states};
  }
  double& r(std::size_t s, std::size_t a) { return rewards[s * num_actions + a]; }
  double r(std::size_t s, std::size_t a) const { return rewards[s * num_actions + a]; }

  // ConfigError unless every row is a probability vector and rewards lie in [0,1].
  void validate() const;
};

struct Solution {
  std::size_t num_states = 0;
  std::size_t horizon = 0;
  std::vector<double> values;  // (H+1) x S, values[H] == 0
  std::vector<int> policy;     // H x S

  double value(std::size_t h, std::size_t s) const { return values[h * num_states + s]; }
  int action(std::size_t h, std::size_t s) const { return policy[h * num_states + s]; }
};

// Backward induction; argmax ties go to the lowest action index.
Solution solve_finite_horizon(const TabularMDP& mdp);

// Expected return of the optimal policy from the MDP's start state.
double optimal_return(const TabularMDP& mdp);

struct Step {
  std::size_t state = 0;
  std::size_t action = 0;
  std::size_t next_state = 0;
  double reward = 0.0;
};

// Dirichlet pseudo-counts over next states and Beta pseudo-counts over the
// reward of each (s,a). Rewards in [0,1] update the Beta as fractional
// successes.
struct DirichletPosterior {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> transition_counts;  // [s][a][s']
  std::vector<double> reward_alpha;       // [s][a]
  std::vector<double> reward_beta;        // [s][a]

  static DirichletPosterior prior(std::size_t num_states, std::size_t num_actions,
                                  double transition_prior = 1.0, double reward_alpha = 1.0,
                                  double reward_beta = 1.0);
};

void posterior_update(DirichletPosterior& posterior, std::span<const Step> trajectory);

TabularMDP sample_mdp(const DirichletPosterior& posterior, std::size_t horizon, Rng& rng);

// Sample one MDP from the posterior and solve it.
Solution psrl_plan(const DirichletPosterior& posterior, std::size_t horizon, Rng& rng);

struct ConfidenceSet {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  double delta = 0.05;
  std::int64_t elapsed_steps = 0;
  std::vector<double> visits;             // [s][a]
  std::vector<double> reward_sums;        // [s][a]
  std::vector<double> transition_counts;  // [s][a][s']

  static ConfidenceSet empty(std::size_t num_states, std::size_t num_actions, double delta);
  void record(const Step& step);
};

// Maximize dot(p, values) over {p in simplex : |p - p_hat|_1 <= budget}.
std::vector<double> optimistic_transition(std::span<const double> p_hat, std::span<const double> values,
                                          double budget);

// Optimistic backward induction with the UCRL2 confidence radii
//   reward:      sqrt(7 ln(2 S A t / delta) / (2 max(1,n)))
//   transitions: sqrt(14 S ln(2 A t / delta) / max(1,n))   (L1)
Solution ucrl2_plan(const ConfidenceSet& conf, std::size_t horizon);

// Finite-horizon Q table with per-(h,s,a) visit counts.
struct QTable {
  std::size_t horizon = 0;
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> values;  // [h][s][a]
  std::vector<double> visits;  // [h][s][a]

  static QTable zeros(std::size_t horizon, std::size_t num_states, std::size_t num_actions);
  std::size_t index(std::size_t h, std::size_t s, std::size_t a) const {
    return (h * num_states + s) * num_actions + a;
  }
  double q(std::size_t h, std::size_t s, std::size_t a) const { return values[index(h, s, a)]; }
  std::span<const double> row(std::size_t h, std::size_t s) const {
    return {values.data() + index(h, s, 0), num_actions};
  }
};

// Q(h,s,a) += lr * (r + max_a' Q(h+1,s',a') - Q(h,s,a)); the continuation is
// zero at h = H-1.
void tabular_q_step(QTable& table, std::size_t h, const Step& step, double learning_rate);

// Polynomially decaying step size n^-0.8 for the n-th visit of (h,s,a).
double q_learning_rate(double visits);

int epsilon_greedy_action(const QTable& table, std::size_t h, std::size_t s, double epsilon, Rng& rng);

inline double episode_regret(double optimal_return, double realized_return) {
  return optimal_return - realized_return;
}

}  // namespace bootdqn::tabular
