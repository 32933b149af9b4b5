#include "bootdqn/heads.hpp"

#include <random>
#include <utility>

#include "bootdqn/error.hpp"
#include "bootdqn/td_target.hpp"

namespace bootdqn {

void MaskDistribution::validate() const {
  if (kind == MaskKind::bernoulli && !(p >= 0.0 && p <= 1.0)) {
    throw ConfigError("bernoulli mask probability must lie in [0,1], got " + std::to_string(p));
  }
}

double MaskDistribution::mean() const {
  switch (kind) {
    case MaskKind::bernoulli: return p;
    case MaskKind::poisson1:
    case MaskKind::exponential1:
    case MaskKind::all_ones: return 1.0;
  }
  return 0.0;
}

double MaskDistribution::variance() const {
  switch (kind) {
    case MaskKind::bernoulli: return p * (1.0 - p);
    case MaskKind::poisson1:
    case MaskKind::exponential1: return 1.0;
    case MaskKind::all_ones: return 0.0;
  }
  return 0.0;
}

std::string MaskDistribution::name() const {
  switch (kind) {
    case MaskKind::bernoulli: return "bernoulli";
    case MaskKind::poisson1: return "poisson1";
    case MaskKind::exponential1: return "exponential1";
    case MaskKind::all_ones: return "all_ones";
  }
  return "unknown";
}

MaskDistribution mask_from_string(const std::string& name, double p) {
  MaskDistribution d;
  if (name == "bernoulli") {
    d = MaskDistribution::bernoulli(p);
  } else if (name == "poisson1" || name == "poisson") {
    d = MaskDistribution::poisson1();
  } else if (name == "exponential1" || name == "exponential") {
    d = MaskDistribution::exponential1();
  } else if (name == "all_ones" || name == "ones") {
    d = MaskDistribution::all_ones();
  } else {
    throw ConfigError("unknown mask distribution '" + name + "'");
  }
  d.validate();
  return d;
}

std::vector<double> sample_mask(const MaskDistribution& dist, std::size_t num_heads, Rng& rng) {
  dist.validate();
  if (num_heads == 0) throw ConfigError("mask needs at least one head");
  std::vector<double> mask(num_heads, 1.0);
  switch (dist.kind) {
    case MaskKind::bernoulli: {
      std::bernoulli_distribution coin(dist.p);
      for (auto& m : mask) m = coin(rng) ? 1.0 : 0.0;
      break;
    }
    case MaskKind::poisson1: {
      std::poisson_distribution<int> poi(1.0);
      for (auto& m : mask) m = static_cast<double>(poi(rng));
      break;
    }
    case MaskKind::exponential1: {
      std::exponential_distribution<double> expo(1.0);
      for (auto& m : mask) m = expo(rng);
      break;
    }
    case MaskKind::all_ones:
      break;
  }
  return mask;
}

MultiHeadNet::MultiHeadNet(NetShape shape) : shape_(std::move(shape)) {
  if (shape_.num_heads == 0) throw ConfigError("network needs at least one head");
  if (shape_.input_dim == 0 || shape_.num_actions == 0) {
    throw ConfigError("network input and action dimensions must be positive");
  }
  std::size_t in = shape_.input_dim;
  for (auto width : shape_.trunk_hidden) {
    trunk_layout_.push_back({in, width, nn::Activation::relu});
    in = width;
  }
  if (!trunk_layout_.empty()) nn::validate_layout(trunk_layout_);
  head_layout_ = nn::mlp_layout(in, shape_.head_hidden, shape_.num_actions);
}

MultiHeadNet::MultiHeadNet(NetShape shape, std::uint64_t seed) : MultiHeadNet(std::move(shape)) {
  if (!trunk_layout_.empty()) trunk_ = nn::init_params(trunk_layout_, derive_seed({seed, 0x7472756eULL}));
  heads_.reserve(shape_.num_heads);
  for (std::size_t k = 0; k < shape_.num_heads; ++k) {
    heads_.push_back(nn::init_params(head_layout_, derive_seed({seed, 0x68656164ULL, k})));
  }
}

MultiHeadNet MultiHeadNet::zeros(NetShape shape) {
  MultiHeadNet net(std::move(shape));
  if (!net.trunk_layout_.empty()) net.trunk_ = nn::zero_params(net.trunk_layout_);
  net.heads_.assign(net.shape_.num_heads, nn::zero_params(net.head_layout_));
  return net;
}

const nn::ParameterSet& MultiHeadNet::head(std::size_t k) const {
  if (k >= heads_.size()) throw UsageError("head index " + std::to_string(k) + " out of range");
  return heads_[k];
}

nn::ParameterSet& MultiHeadNet::head(std::size_t k) {
  if (k >= heads_.size()) throw UsageError("head index " + std::to_string(k) + " out of range");
  return heads_[k];
}

std::vector<double> MultiHeadNet::trunk_output(std::span<const double> features) const {
  if (features.size() != shape_.input_dim) {
    throw ConfigError("features have length " + std::to_string(features.size()) + ", network expects " +
                      std::to_string(shape_.input_dim));
  }
  if (trunk_layout_.empty()) return {features.begin(), features.end()};
  auto trace = nn::forward(trunk_, trunk_layout_, features);
  return std::move(trace.activations.back());
}

std::vector<double> MultiHeadNet::q_values(std::span<const double> features, std::size_t k) const {
  const auto& params = head(k);
  auto x = trunk_output(features);
  auto trace = nn::forward(params, head_layout_, x);
  return std::move(trace.activations.back());
}

QMatrix MultiHeadNet::all_q_values(std::span<const double> features) const {
  QMatrix q{num_heads(), num_actions(), {}};
  q.data.reserve(q.rows * q.cols);
  auto x = trunk_output(features);
  nn::Trace trace;
  for (const auto& h : heads_) {
    nn::forward_into(h, head_layout_, x, trace);
    const auto out = trace.output();
    q.data.insert(q.data.end(), out.begin(), out.end());
  }
  return q;
}

TargetNet make_target(const MultiHeadNet& online) { return {online, 0}; }

void sync_target(const MultiHeadNet& online, TargetNet& target, std::int64_t step) {
  target.net = online;
  target.last_sync_step = step;
}

MultiHeadOptimizer make_optimizer(const MultiHeadNet& net, const nn::RmsPropConfig& config) {
  MultiHeadOptimizer opt;
  if (net.has_trunk()) {
    opt.trunk = nn::make_optimizer(net.trunk_layout(), config);
  } else {
    opt.trunk.config = config;
  }
  for (std::size_t k = 0; k < net.num_heads(); ++k) {
    opt.heads.push_back(nn::make_optimizer(net.head_layout(), config));
  }
  return opt;
}

TrainStats masked_train_step(MultiHeadNet& net, const TargetNet& target, MultiHeadOptimizer& opt,
                             std::span<const Transition> batch, const TrainHyper& hyper) {
  std::vector<const Transition*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& t : batch) ptrs.push_back(&t);
  return masked_train_step(net, target, opt, ptrs, hyper);
}

TrainStats masked_train_step(MultiHeadNet& net, const TargetNet& target, MultiHeadOptimizer& opt,
                             std::span<const Transition* const> batch, const TrainHyper& hyper) {
  if (batch.empty()) throw UsageError("masked_train_step: empty batch");
  const std::size_t K = net.num_heads();
  const std::size_t A = net.num_actions();
  if (target.net.num_heads() != K || opt.heads.size() != K) {
    throw ConfigError("masked_train_step: head count mismatch between net, target and optimizer");
  }
  const bool trunk = net.has_trunk();
  const auto& head_layout = net.head_layout();
  const std::size_t head_in = head_layout.front().input_dim;

  std::vector<nn::GradientSet> grads(K, nn::zero_gradients(head_layout));
  nn::GradientSet trunk_grads;
  if (trunk) trunk_grads = nn::zero_gradients(net.trunk_layout());

  thread_local nn::Trace trunk_trace, trunk_next_online, trunk_next_target;
  thread_local nn::Trace head_trace, next_online, next_target;
  std::vector<double> out_grad(A, 0.0);
  std::vector<double> head_in_grad(trunk ? head_in : 0);
  std::vector<double> trunk_out_grad(trunk ? head_in : 0);

  TrainStats stats;
  stats.heads.assign(K, {});
  std::vector<double> sq_sum(K, 0.0);

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& tr = *batch[i];
    if (tr.mask.size() != K) throw UsageError("masked_train_step: transition mask length differs from K");
    if (tr.action < 0 || static_cast<std::size_t>(tr.action) >= A) {
      throw UsageError("masked_train_step: action out of range at transition " + std::to_string(i));
    }
    bool any = false;
    for (double m : tr.mask) any = any || m != 0.0;
    if (!any) continue;

    std::span<const double> x = tr.features;
    std::span<const double> x_next_online = tr.next_features;
    std::span<const double> x_next_target = tr.next_features;
    if (trunk) {
      nn::forward_into(net.trunk(), net.trunk_layout(), tr.features, trunk_trace);
      x = trunk_trace.output();
      if (!tr.terminal) {
        nn::forward_into(net.trunk(), net.trunk_layout(), tr.next_features, trunk_next_online);
        nn::forward_into(target.net.trunk(), net.trunk_layout(), tr.next_features, trunk_next_target);
        x_next_online = trunk_next_online.output();
        x_next_target = trunk_next_target.output();
      }
      std::fill(trunk_out_grad.begin(), trunk_out_grad.end(), 0.0);
    } else if (tr.features.size() != head_in || tr.next_features.size() != head_in) {
      throw ConfigError("masked_train_step: feature length mismatch at transition " + std::to_string(i));
    }

    for (std::size_t k = 0; k < K; ++k) {
      const double m = tr.mask[k];
      if (m == 0.0) continue;
      const auto& params = net.head(k);
      nn::forward_into(params, head_layout, x, head_trace);
      const double q = head_trace.output()[static_cast<std::size_t>(tr.action)];

      double y = 0.0;
      try {
        if (tr.terminal) {
          y = q_target_ddqn(tr.reward, true, {}, {}, hyper.gamma);
        } else {
          nn::forward_into(params, head_layout, x_next_online, next_online);
          nn::forward_into(target.net.head(k), head_layout, x_next_target, next_target);
          y = q_target_ddqn(tr.reward, false, next_online.output(), next_target.output(), hyper.gamma);
        }
      } catch (const TrainingError& e) {
        throw TrainingError("non-finite target at transition " + std::to_string(i) + ", head " +
                            std::to_string(k) + ": " + e.what());
      }

      const double diff = q - y;
      std::fill(out_grad.begin(), out_grad.end(), 0.0);
      out_grad[static_cast<std::size_t>(tr.action)] = m * diff;
      if (trunk) {
        nn::backward_accumulate(params, head_layout, head_trace, out_grad, grads[k], head_in_grad);
        for (std::size_t j = 0; j < head_in; ++j) trunk_out_grad[j] += head_in_grad[j];
      } else {
        nn::backward_accumulate(params, head_layout, head_trace, out_grad, grads[k]);
      }
      sq_sum[k] += m * diff * diff;
      stats.heads[k].mask_weight += m;
    }
    if (trunk) nn::backward_accumulate(net.trunk(), net.trunk_layout(), trunk_trace, trunk_out_grad, trunk_grads);
  }

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (std::size_t k = 0; k < K; ++k) {
    grads[k].scale(inv_batch);
    nn::optimizer_step(net.head(k), grads[k], opt.heads[k]);
    if (stats.heads[k].mask_weight > 0.0) {
      stats.heads[k].mean_squared_error = sq_sum[k] / stats.heads[k].mask_weight;
    }
  }
  if (trunk) {
    trunk_grads.scale(inv_batch);
    if (hyper.normalize_trunk_gradient) trunk_grads.scale(1.0 / static_cast<double>(K));
    nn::optimizer_step(net.trunk(), trunk_grads, opt.trunk);
  }
  return stats;
}

}  // namespace bootdqn
