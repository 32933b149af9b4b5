#include "bootdqn/envs.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "bootdqn/error.hpp"

namespace bootdqn::envs {

std::string to_string(Encoding e) { return e == Encoding::one_hot ? "one_hot" : "thermometer"; }

Encoding encoding_from_string(const std::string& name) {
  if (name == "one_hot" || name == "onehot" || name == "one-hot") return Encoding::one_hot;
  if (name == "thermometer" || name == "therm") return Encoding::thermometer;
  throw ConfigError("unknown encoding '" + name + "'");
}

void ChainSpec::validate() const {
  if (n < 3) throw ConfigError("chain length must be >= 3");
  if (horizon < 1) throw ConfigError("chain horizon must be >= 1");
  if (start_state < 1 || start_state > n) throw ConfigError("chain start state out of range");
  if (!(small_reward >= 0.0 && big_reward >= 0.0)) throw ConfigError("chain rewards must be non-negative");
  if (!(slip >= 0.0 && slip <= 1.0)) throw ConfigError("chain slip must lie in [0,1]");
}

tabular::TabularMDP to_tabular(const ChainSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(spec.n);
  auto mdp = tabular::TabularMDP::empty(n, 2, static_cast<std::size_t>(spec.horizon));
  mdp.start_state = static_cast<std::size_t>(spec.start_state - 1);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t left = s == 0 ? 0 : s - 1;
    const std::size_t right = std::min(n - 1, s + 1);
    mdp.p(s, kLeft, left) += 1.0;
    mdp.p(s, kRight, right) += 1.0 - spec.slip;
    mdp.p(s, kRight, left) += spec.slip;
    if (s == 0) {
      mdp.r(s, kLeft) += spec.small_reward;
      mdp.r(s, kRight) += spec.slip * spec.small_reward;
    }
    if (s == n - 1) mdp.r(s, kRight) += (1.0 - spec.slip) * spec.big_reward;
  }
  return mdp;
}

ChainSpec calibrate_chain(int n, Encoding encoding) {
  if (n < 3) throw ConfigError("chain length must be >= 3");
  ChainSpec spec;
  spec.n = n;
  spec.horizon = n + 9;
  spec.encoding = encoding;
  std::ostringstream achieved;
  for (int start = 1; start <= n; ++start) {
    spec.start_state = start;
    const double rho = tabular::optimal_return(to_tabular(spec));
    if (std::abs(rho - 10.0) <= 1e-9) {
      spec.optimal_return = rho;
      return spec;
    }
    achieved << (start > 1 ? ", " : "") << "s" << start << ": " << rho;
  }
  throw CalibrationError("no start state gives optimal return 10 for N=" + std::to_string(n) +
                         " (achievable optima " + achieved.str() + ")");
}

ChainSpec slip_chain(int n, Encoding encoding, double slip) {
  ChainSpec spec;
  spec.n = n;
  spec.horizon = 15;
  spec.encoding = encoding;
  spec.start_state = 1;
  spec.slip = slip;
  spec.optimal_return = tabular::optimal_return(to_tabular(spec));
  return spec;
}

std::vector<double> encode(const ChainSpec& spec, int state) {
  if (state < 1 || state > spec.n) {
    throw UsageError("state " + std::to_string(state) + " outside [1," + std::to_string(spec.n) + "]");
  }
  std::vector<double> phi(static_cast<std::size_t>(spec.n), 0.0);
  if (spec.encoding == Encoding::one_hot) {
    phi[static_cast<std::size_t>(state - 1)] = 1.0;
  } else {
    std::fill(phi.begin(), phi.begin() + state, 1.0);
  }
  return phi;
}

StepResult chain_step(const ChainSpec& spec, int state, int step_count, int action, Rng& rng) {
  if (step_count >= spec.horizon) throw UsageError("chain episode already finished");
  if (state < 1 || state > spec.n) throw UsageError("chain state out of range");
  if (action != kLeft && action != kRight) throw UsageError("chain action must be 0 (left) or 1 (right)");

  int effective = action;
  if (action == kRight && spec.slip > 0.0) {
    // Only "right" consumes randomness; "left" is deterministic.
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < spec.slip) effective = kLeft;
  }
  StepResult out;
  if (effective == kLeft) {
    out.next_state = std::max(1, state - 1);
    out.reward = state == 1 ? spec.small_reward : 0.0;
  } else {
    out.next_state = std::min(spec.n, state + 1);
    out.reward = state == spec.n ? spec.big_reward : 0.0;
  }
  out.step_count = step_count + 1;
  out.done = out.step_count >= spec.horizon;
  return out;
}

ChainEnv::ChainEnv(ChainSpec spec) : spec_(std::move(spec)), state_(spec_.start_state) { spec_.validate(); }

int ChainEnv::reset() {
  state_ = spec_.start_state;
  steps_ = 0;
  return state_;
}

StepResult ChainEnv::step(int action, Rng& rng) {
  auto r = chain_step(spec_, state_, steps_, action, rng);
  state_ = r.next_state;
  steps_ = r.step_count;
  return r;
}

double regression_response(double x, double w, double alpha, double beta) {
  return x + std::sin(alpha * (x + w)) + std::sin(beta * (x + w)) + w;
}

RegressionDataset generate_regression_data(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("regression dataset needs at least one point");
  RegressionDataset data;
  Rng rng = make_rng(seed);
  // Total support length 0.8; map a uniform draw on (0, 0.8) across the gap.
  std::uniform_real_distribution<double> u(0.0, 0.8);
  std::normal_distribution<double> noise(0.0, data.noise_sd);
  for (std::size_t i = 0; i < n; ++i) {
    double x = u(rng);
    while (x == 0.0 || x == 0.6) x = u(rng);
    if (x > 0.6) x += 0.2;
    if (x >= 1.0) x = std::nextafter(1.0, 0.0);
    const double w = noise(rng);
    data.x.push_back(x);
    data.noise.push_back(w);
    data.y.push_back(regression_response(x, w, data.alpha, data.beta));
  }
  return data;
}

}  // namespace bootdqn::envs
