#include "bootdqn/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "bootdqn/agents.hpp"
#include "bootdqn/error.hpp"

namespace bootdqn::tabular {

TabularMDP TabularMDP::empty(std::size_t num_states, std::size_t num_actions, std::size_t horizon) {
  if (num_states == 0 || num_actions == 0) throw ConfigError("MDP needs at least one state and action");
  TabularMDP mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.horizon = horizon;
  mdp.transitions.assign(num_states * num_actions * num_states, 0.0);
  mdp.rewards.assign(num_states * num_actions, 0.0);
  return mdp;
}

void TabularMDP::validate() const {
  if (num_states == 0 || num_actions == 0) throw ConfigError("MDP needs at least one state and action");
  if (transitions.size() != num_states * num_actions * num_states ||
      rewards.size() != num_states * num_actions) {
    throw ConfigError("MDP tables have the wrong size");
  }
  if (start_state >= num_states) throw ConfigError("MDP start state out of range");
  for (std::size_t s = 0; s < num_states; ++s) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      double total = 0.0;
      for (double v : row(s, a)) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw ConfigError("transition row (" + std::to_string(s) + "," + std::to_string(a) + ") has an invalid entry");
        }
        total += v;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw ConfigError("transition row (" + std::to_string(s) + "," + std::to_string(a) + ") sums to " +
                          std::to_string(total));
      }
      if (!(r(s, a) >= 0.0 && r(s, a) <= 1.0)) {
        throw ConfigError("reward (" + std::to_string(s) + "," + std::to_string(a) + ") outside [0,1]");
      }
    }
  }
}

Solution solve_finite_horizon(const TabularMDP& mdp) {
  mdp.validate();
  const std::size_t S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  Solution sol{S, H, std::vector<double>((H + 1) * S, 0.0), std::vector<int>(H * S, 0)};
  for (std::size_t h = H; h-- > 0;) {
    const double* next = sol.values.data() + (h + 1) * S;
    for (std::size_t s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (std::size_t a = 0; a < A; ++a) {
        const auto p = mdp.row(s, a);
        double q = mdp.r(s, a);
        for (std::size_t n = 0; n < S; ++n) q += p[n] * next[n];
        if (q > best) {
          best = q;
          best_a = static_cast<int>(a);
        }
      }
      sol.values[h * S + s] = best;
      sol.policy[h * S + s] = best_a;
    }
  }
  return sol;
}

double optimal_return(const TabularMDP& mdp) {
  return solve_finite_horizon(mdp).value(0, mdp.start_state);
}

DirichletPosterior DirichletPosterior::prior(std::size_t num_states, std::size_t num_actions,
                                             double transition_prior, double reward_alpha,
                                             double reward_beta) {
  if (!(transition_prior > 0.0 && reward_alpha > 0.0 && reward_beta > 0.0)) {
    throw ConfigError("posterior prior counts must be positive");
  }
  return {num_states, num_actions,
          std::vector<double>(num_states * num_actions * num_states, transition_prior),
          std::vector<double>(num_states * num_actions, reward_alpha),
          std::vector<double>(num_states * num_actions, reward_beta)};
}

void posterior_update(DirichletPosterior& posterior, std::span<const Step> trajectory) {
  const std::size_t S = posterior.num_states, A = posterior.num_actions;
  for (const auto& st : trajectory) {
    if (st.state >= S || st.next_state >= S || st.action >= A) {
      throw UsageError("posterior_update: step indices out of range");
    }
    if (!(st.reward >= 0.0 && st.reward <= 1.0)) throw UsageError("posterior_update: reward outside [0,1]");
  }
  for (const auto& st : trajectory) {
    const std::size_t sa = st.state * A + st.action;
    posterior.transition_counts[sa * S + st.next_state] += 1.0;
    posterior.reward_alpha[sa] += st.reward;
    posterior.reward_beta[sa] += 1.0 - st.reward;
  }
}

TabularMDP sample_mdp(const DirichletPosterior& posterior, std::size_t horizon, Rng& rng) {
  const std::size_t S = posterior.num_states, A = posterior.num_actions;
  auto mdp = TabularMDP::empty(S, A, horizon);
  auto gamma_draw = [&rng](double shape) { return std::gamma_distribution<double>(shape, 1.0)(rng); };
  for (std::size_t sa = 0; sa < S * A; ++sa) {
    double total = 0.0;
    for (std::size_t n = 0; n < S; ++n) {
      const double g = gamma_draw(posterior.transition_counts[sa * S + n]);
      mdp.transitions[sa * S + n] = g;
      total += g;
    }
    if (total > 0.0) {
      for (std::size_t n = 0; n < S; ++n) mdp.transitions[sa * S + n] /= total;
    } else {
      // Every gamma draw underflowed; fall back to the posterior mean.
      double counts = 0.0;
      for (std::size_t n = 0; n < S; ++n) counts += posterior.transition_counts[sa * S + n];
      for (std::size_t n = 0; n < S; ++n) mdp.transitions[sa * S + n] = posterior.transition_counts[sa * S + n] / counts;
    }
    const double x = gamma_draw(posterior.reward_alpha[sa]);
    const double y = gamma_draw(posterior.reward_beta[sa]);
    mdp.rewards[sa] = (x + y > 0.0) ? x / (x + y)
                                    : posterior.reward_alpha[sa] / (posterior.reward_alpha[sa] + posterior.reward_beta[sa]);
  }
  return mdp;
}

Solution psrl_plan(const DirichletPosterior& posterior, std::size_t horizon, Rng& rng) {
  return solve_finite_horizon(sample_mdp(posterior, horizon, rng));
}

ConfidenceSet ConfidenceSet::empty(std::size_t num_states, std::size_t num_actions, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("UCRL2 delta must lie in (0,1)");
  return {num_states, num_actions, delta, 0,
          std::vector<double>(num_states * num_actions, 0.0),
          std::vector<double>(num_states * num_actions, 0.0),
          std::vector<double>(num_states * num_actions * num_states, 0.0)};
}

void ConfidenceSet::record(const Step& st) {
  if (st.state >= num_states || st.next_state >= num_states || st.action >= num_actions) {
    throw UsageError("ConfidenceSet::record: step indices out of range");
  }
  const std::size_t sa = st.state * num_actions + st.action;
  visits[sa] += 1.0;
  reward_sums[sa] += st.reward;
  transition_counts[sa * num_states + st.next_state] += 1.0;
  ++elapsed_steps;
}

std::vector<double> optimistic_transition(std::span<const double> p_hat, std::span<const double> values,
                                          double budget) {
  if (p_hat.size() != values.size() || p_hat.empty()) {
    throw UsageError("optimistic_transition: size mismatch");
  }
  const std::size_t n = p_hat.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

  std::vector<double> p(p_hat.begin(), p_hat.end());
  p[order[0]] = std::min(1.0, p_hat[order[0]] + budget / 2.0);
  double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (std::size_t l = n; l-- > 1 && total > 1.0;) {
    const std::size_t idx = order[l];
    const double rest = total - p[idx];
    p[idx] = std::max(0.0, 1.0 - rest);
    total = rest + p[idx];
  }
  return p;
}

Solution ucrl2_plan(const ConfidenceSet& conf, std::size_t horizon) {
  const std::size_t S = conf.num_states, A = conf.num_actions, H = horizon;
  const double t = std::max<double>(1.0, static_cast<double>(conf.elapsed_steps));
  const double log_r = std::log(2.0 * S * A * t / conf.delta);
  const double log_p = std::log(2.0 * A * t / conf.delta);

  std::vector<double> r_opt(S * A);
  std::vector<double> p_hat(S * A * S);
  std::vector<double> radius(S * A);
  for (std::size_t sa = 0; sa < S * A; ++sa) {
    const double n = std::max(1.0, conf.visits[sa]);
    const double r_hat = conf.visits[sa] > 0.0 ? conf.reward_sums[sa] / conf.visits[sa] : 0.0;
    r_opt[sa] = std::min(1.0, r_hat + std::sqrt(7.0 * log_r / (2.0 * n)));
    radius[sa] = std::sqrt(14.0 * static_cast<double>(S) * log_p / n);
    for (std::size_t s2 = 0; s2 < S; ++s2) {
      p_hat[sa * S + s2] = conf.visits[sa] > 0.0 ? conf.transition_counts[sa * S + s2] / conf.visits[sa]
                                                 : 1.0 / static_cast<double>(S);
    }
  }

  Solution sol{S, H, std::vector<double>((H + 1) * S, 0.0), std::vector<int>(H * S, 0)};
  for (std::size_t h = H; h-- > 0;) {
    const std::span<const double> next(sol.values.data() + (h + 1) * S, S);
    for (std::size_t s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (std::size_t a = 0; a < A; ++a) {
        const std::size_t sa = s * A + a;
        const auto p = optimistic_transition({p_hat.data() + sa * S, S}, next, radius[sa]);
        double q = r_opt[sa];
        for (std::size_t n = 0; n < S; ++n) q += p[n] * next[n];
        if (q > best) {
          best = q;
          best_a = static_cast<int>(a);
        }
      }
      sol.values[h * S + s] = best;
      sol.policy[h * S + s] = best_a;
    }
  }
  return sol;
}

QTable QTable::zeros(std::size_t horizon, std::size_t num_states, std::size_t num_actions) {
  const std::size_t n = horizon * num_states * num_actions;
  return {horizon, num_states, num_actions, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
}

void tabular_q_step(QTable& table, std::size_t h, const Step& step, double learning_rate) {
  if (h >= table.horizon || step.state >= table.num_states || step.next_state >= table.num_states ||
      step.action >= table.num_actions) {
    throw UsageError("tabular_q_step: index out of range");
  }
  double continuation = 0.0;
  if (h + 1 < table.horizon) {
    const auto next = table.row(h + 1, step.next_state);
    continuation = *std::max_element(next.begin(), next.end());
  }
  const std::size_t i = table.index(h, step.state, step.action);
  table.values[i] += learning_rate * (step.reward + continuation - table.values[i]);
  table.visits[i] += 1.0;
}

double q_learning_rate(double visits) { return std::pow(std::max(1.0, visits), -0.8); }

int epsilon_greedy_action(const QTable& table, std::size_t h, std::size_t s, double epsilon, Rng& rng) {
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon) {
    return static_cast<int>(std::uniform_int_distribution<std::size_t>(0, table.num_actions - 1)(rng));
  }
  return argmax_random_tie(table.row(h, s), rng);
}

}  // namespace bootdqn::tabular
