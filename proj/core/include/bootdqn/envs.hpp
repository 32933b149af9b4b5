#pragma once

// Chain environments (deterministic and slipping), their feature encoders,
// and the noisy 1-d regression data generator.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bootdqn/rng.hpp"
#include "bootdqn/tabular.hpp"

namespace bootdqn::envs {

enum class Encoding { one_hot, thermometer };

std::string to_string(Encoding e);
Encoding encoding_from_string(const std::string& name);

inline constexpr int kLeft = 0;
inline constexpr int kRight = 1;

// States are numbered 1..n. Rewards attach to endpoint (state, action)
// events: small_reward for an effective "left" taken in state 1,
// big_reward for an effective "right" taken in state n. With slip > 0 a
// "right" succeeds with probability 1 - slip and otherwise acts as "left".
struct ChainSpec {
  int n = 10;
  int horizon = 19;
  Encoding encoding = Encoding::thermometer;
  double small_reward = 1e-3;
  double big_reward = 1.0;
  int start_state = 1;
  double slip = 0.0;
  // Optimal undiscounted return from start_state, computed by backward
  // induction when the ChainSpec is built by one of the factories below.
  double optimal_return = 0.0;

  void validate() const;
};

// Deterministic chain with the default rewards, horizon n + 9 and a start
// state chosen so the optimal return is exactly 10. Throws
// CalibrationError, listing the achievable optima, if no start state works.
ChainSpec calibrate_chain(int n, Encoding encoding = Encoding::thermometer);

// Chain with 50% slip on "right", horizon 15, start state 1.
ChainSpec slip_chain(int n = 6, Encoding encoding = Encoding::thermometer, double slip = 0.5);

// Indicator features in {0,1}^n. Throws UsageError for state outside [1,n].
std::vector<double> encode(const ChainSpec& spec, int state);

// Exact tabular model (states shifted to 0..n-1, expected rewards).
tabular::TabularMDP to_tabular(const ChainSpec& spec);

struct StepResult {
  int next_state = 1;
  double reward = 0.0;
  bool done = false;
  int step_count = 0;
};

// Pure transition function; `step_count` counts steps already taken.
StepResult chain_step(const ChainSpec& spec, int state, int step_count, int action, Rng& rng);

class ChainEnv {
 public:
  explicit ChainEnv(ChainSpec spec);

  int reset();
  // Throws UsageError once the episode has reached its horizon.
  StepResult step(int action, Rng& rng);

  const ChainSpec& spec() const { return spec_; }
  int state() const { return state_; }
  int steps() const { return steps_; }
  bool done() const { return steps_ >= spec_.horizon; }
  std::vector<double> features() const { return encode(spec_, state_); }

 private:
  ChainSpec spec_;
  int state_;
  int steps_ = 0;
};

struct RegressionDataset {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> noise;  // realized w_i
  double alpha = 4.0;
  double beta = 13.0;
  double noise_sd = 0.03;
};

// y = x + sin(alpha (x + w)) + sin(beta (x + w)) + w.
double regression_response(double x, double w, double alpha = 4.0, double beta = 13.0);

// x uniform on (0, 0.6) u (0.8, 1), w ~ N(0, 0.03^2).
RegressionDataset generate_regression_data(std::size_t n, std::uint64_t seed);

}  // namespace bootdqn::envs
