#pragma once

// Minimal fully-connected network engine: parameter storage, forward pass,
// exact reverse-mode gradients and an RMSProp-style optimizer. Everything is
// double precision and deterministic given a seed.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace bootdqn::nn {

enum class Activation { relu, identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct LayerLayout {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  Activation activation = Activation::identity;

  friend bool operator==(const LayerLayout&, const LayerLayout&) = default;
};

using Layout = std::vector<LayerLayout>;

// Hidden layers of `hidden` relu units followed by an identity output layer.
Layout mlp_layout(std::size_t input_dim, std::span<const std::size_t> hidden,
                  std::size_t output_dim);

// Throws ConfigError unless dims are >= 1 and consecutive layers chain.
void validate_layout(std::span<const LayerLayout> layout);

// Weights are row-major (output_dim x input_dim).
struct DenseTensors {
  std::vector<double> weights;
  std::vector<double> bias;

  friend bool operator==(const DenseTensors&, const DenseTensors&) = default;
};

struct ParameterSet {
  std::vector<DenseTensors> layers;

  std::size_t size() const;
  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;
};

struct GradientSet {
  std::vector<DenseTensors> layers;

  std::size_t size() const;
  void set_zero();
  void scale(double factor);
  bool all_finite() const;
  friend bool operator==(const GradientSet&, const GradientSet&) = default;
};

ParameterSet zero_params(std::span<const LayerLayout> layout);
GradientSet zero_gradients(std::span<const LayerLayout> layout);

// Weights i.i.d. uniform on [-sqrt(3/fan_in), sqrt(3/fan_in)] (variance
// 1/fan_in), biases zero. Same (layout, seed) gives bit-identical output.
ParameterSet init_params(std::span<const LayerLayout> layout, std::uint64_t seed);

// Throws ConfigError when the parameter shapes disagree with the layout.
void check_shapes(const ParameterSet& params, std::span<const LayerLayout> layout);

// activations[0] is the input, activations[i + 1] the output of layer i.
struct Trace {
  std::vector<std::vector<double>> activations;

  std::span<const double> output() const { return activations.back(); }
  std::span<const double> input() const { return activations.front(); }
};

Trace forward(const ParameterSet& params, std::span<const LayerLayout> layout,
              std::span<const double> input);

// Same as forward() but reuses the buffers already held by `trace`.
void forward_into(const ParameterSet& params, std::span<const LayerLayout> layout,
                  std::span<const double> input, Trace& trace);

// Gradient of dot(output, output_gradient) with respect to every parameter.
GradientSet backward(const ParameterSet& params, std::span<const LayerLayout> layout,
                     const Trace& trace, std::span<const double> output_gradient);

// Adds the gradient into `grads`. When `input_gradient` is non-empty it
// receives d(dot(output, output_gradient))/d(input), which is what a shared
// trunk needs from the layers above it.
void backward_accumulate(const ParameterSet& params, std::span<const LayerLayout> layout,
                         const Trace& trace, std::span<const double> output_gradient,
                         GradientSet& grads, std::span<double> input_gradient = {});

struct RmsPropConfig {
  double decay = 0.95;
  double learning_rate = 1e-3;
  double epsilon = 1e-8;
};

struct OptimizerState {
  RmsPropConfig config;
  GradientSet accumulator;
};

OptimizerState make_optimizer(std::span<const LayerLayout> layout, const RmsPropConfig& config);

// acc <- decay*acc + (1-decay)*g^2;  p <- p - lr*g/sqrt(acc + eps).
// Throws TrainingError on a non-finite gradient before touching any state.
void optimizer_step(ParameterSet& params, const GradientSet& grads, OptimizerState& state);

// Text snapshot: header, layer shapes, then row-major values with
// round-trip precision.
inline constexpr int kSnapshotVersion = 1;
void write_snapshot(std::ostream& out, std::span<const LayerLayout> layout,
                    const ParameterSet& params);
struct Snapshot {
  Layout layout;
  ParameterSet params;
};
Snapshot read_snapshot(std::istream& in);

}  // namespace bootdqn::nn
