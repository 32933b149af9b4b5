#pragma once

// K-headed Q-network. Heads branch off an optional shared trunk; with an
// empty trunk every head is an independent MLP over the raw features.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bootdqn/nn.hpp"
#include "bootdqn/replay.hpp"
#include "bootdqn/rng.hpp"

namespace bootdqn {

enum class MaskKind { bernoulli, poisson1, exponential1, all_ones };

struct MaskDistribution {
  MaskKind kind = MaskKind::bernoulli;
  double p = 0.5;  // only read for bernoulli

  static MaskDistribution bernoulli(double p) { return {MaskKind::bernoulli, p}; }
  static MaskDistribution poisson1() { return {MaskKind::poisson1, 1.0}; }
  static MaskDistribution exponential1() { return {MaskKind::exponential1, 1.0}; }
  static MaskDistribution all_ones() { return {MaskKind::all_ones, 1.0}; }

  void validate() const;  // ConfigError for bernoulli p outside [0,1]
  double mean() const;
  double variance() const;
  std::string name() const;
};

// Accepts "bernoulli", "poisson1"/"poisson", "exponential1"/"exponential",
// "all_ones"/"ones".
MaskDistribution mask_from_string(const std::string& name, double p);

std::vector<double> sample_mask(const MaskDistribution& dist, std::size_t num_heads, Rng& rng);

struct NetShape {
  std::size_t input_dim = 1;
  std::vector<std::size_t> trunk_hidden;  // empty: no shared trunk
  std::vector<std::size_t> head_hidden;
  std::size_t num_actions = 2;
  std::size_t num_heads = 1;
};

// Row-major K x |A| matrix of action values.
struct QMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

class MultiHeadNet {
 public:
  // Trunk and heads get independent seeds derived from `seed`, so heads
  // start out different from one another.
  MultiHeadNet(NetShape shape, std::uint64_t seed);

  // All-zero parameters.
  static MultiHeadNet zeros(NetShape shape);

  const NetShape& shape() const { return shape_; }
  std::size_t num_heads() const { return heads_.size(); }
  std::size_t num_actions() const { return shape_.num_actions; }
  std::size_t input_dim() const { return shape_.input_dim; }
  bool has_trunk() const { return !trunk_layout_.empty(); }

  const nn::Layout& trunk_layout() const { return trunk_layout_; }
  const nn::Layout& head_layout() const { return head_layout_; }
  const nn::ParameterSet& trunk() const { return trunk_; }
  nn::ParameterSet& trunk() { return trunk_; }
  const nn::ParameterSet& head(std::size_t k) const;
  nn::ParameterSet& head(std::size_t k);

  // Q_k(s, .). Throws UsageError for k out of range, ConfigError on a
  // feature-length mismatch.
  std::vector<double> q_values(std::span<const double> features, std::size_t k) const;
  QMatrix all_q_values(std::span<const double> features) const;

  // Features after the trunk (a copy of the input when the trunk is empty).
  std::vector<double> trunk_output(std::span<const double> features) const;

  friend bool operator==(const MultiHeadNet& a, const MultiHeadNet& b) {
    return a.trunk_ == b.trunk_ && a.heads_ == b.heads_;
  }

 private:
  explicit MultiHeadNet(NetShape shape);

  NetShape shape_;
  nn::Layout trunk_layout_;
  nn::Layout head_layout_;
  nn::ParameterSet trunk_;
  std::vector<nn::ParameterSet> heads_;
};

// Frozen copy of the online parameters, refreshed only by sync_target.
struct TargetNet {
  MultiHeadNet net;
  std::int64_t last_sync_step = 0;
};

TargetNet make_target(const MultiHeadNet& online);
void sync_target(const MultiHeadNet& online, TargetNet& target, std::int64_t step);

struct MultiHeadOptimizer {
  nn::OptimizerState trunk;  // empty accumulator when there is no trunk
  std::vector<nn::OptimizerState> heads;
};

MultiHeadOptimizer make_optimizer(const MultiHeadNet& net, const nn::RmsPropConfig& config);

struct TrainHyper {
  double gamma = 0.99;
  bool normalize_trunk_gradient = true;  // scale the trunk gradient by 1/K
};

struct HeadLoss {
  double mean_squared_error = 0.0;  // mask-weighted mean of (Q - y)^2
  double mask_weight = 0.0;         // sum of mask entries seen by the head
};

struct TrainStats {
  std::vector<HeadLoss> heads;
};

// One masked minibatch update. For head k the gradient of transition t is
// m_t^k (Q_k(s,a) - y_k) dQ_k, with y_k the double-DQN target built from
// head k of the online and target nets. Gradients are summed over the batch
// and divided by its size before a single optimizer step per parameter
// block. Throws TrainingError (naming the transition index) on a non-finite
// target.
TrainStats masked_train_step(MultiHeadNet& net, const TargetNet& target, MultiHeadOptimizer& opt,
                             std::span<const Transition* const> batch, const TrainHyper& hyper);
TrainStats masked_train_step(MultiHeadNet& net, const TargetNet& target, MultiHeadOptimizer& opt,
                             std::span<const Transition> batch, const TrainHyper& hyper);

}  // namespace bootdqn
