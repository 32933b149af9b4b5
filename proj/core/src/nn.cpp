#include "bootdqn/nn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "bootdqn/error.hpp"
#include "bootdqn/rng.hpp"

namespace bootdqn::nn {

namespace {

template <class Tensors>
Tensors zero_tensors(std::span<const LayerLayout> layout) {
  validate_layout(layout);
  Tensors t;
  t.layers.reserve(layout.size());
  for (const auto& l : layout) {
    t.layers.push_back({std::vector<double>(l.input_dim * l.output_dim, 0.0),
                        std::vector<double>(l.output_dim, 0.0)});
  }
  return t;
}

template <class Tensors>
std::size_t count(const Tensors& t) {
  std::size_t n = 0;
  for (const auto& l : t.layers) n += l.weights.size() + l.bias.size();
  return n;
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double parse_double(const std::string& token) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ConfigError("snapshot: bad number '" + token + "'");
  }
  return v;
}

}  // namespace

std::string_view to_string(Activation a) {
  return a == Activation::relu ? "relu" : "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

Layout mlp_layout(std::size_t input_dim, std::span<const std::size_t> hidden,
                  std::size_t output_dim) {
  Layout layout;
  std::size_t in = input_dim;
  for (auto width : hidden) {
    layout.push_back({in, width, Activation::relu});
    in = width;
  }
  layout.push_back({in, output_dim, Activation::identity});
  validate_layout(layout);
  return layout;
}

void validate_layout(std::span<const LayerLayout> layout) {
  if (layout.empty()) throw ConfigError("layout has no layers");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout[i].input_dim == 0 || layout[i].output_dim == 0) {
      throw ConfigError("layer " + std::to_string(i) + " has a zero dimension");
    }
    if (i > 0 && layout[i - 1].output_dim != layout[i].input_dim) {
      throw ConfigError("layer " + std::to_string(i) + " input_dim " +
                        std::to_string(layout[i].input_dim) + " does not match previous output_dim " +
                        std::to_string(layout[i - 1].output_dim));
    }
  }
}

std::size_t ParameterSet::size() const { return count(*this); }
std::size_t GradientSet::size() const { return count(*this); }

void GradientSet::set_zero() {
  for (auto& l : layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

void GradientSet::scale(double factor) {
  for (auto& l : layers) {
    for (auto& w : l.weights) w *= factor;
    for (auto& b : l.bias) b *= factor;
  }
}

bool GradientSet::all_finite() const {
  for (const auto& l : layers) {
    for (double w : l.weights) if (!std::isfinite(w)) return false;
    for (double b : l.bias) if (!std::isfinite(b)) return false;
  }
  return true;
}

ParameterSet zero_params(std::span<const LayerLayout> layout) {
  return zero_tensors<ParameterSet>(layout);
}

GradientSet zero_gradients(std::span<const LayerLayout> layout) {
  return zero_tensors<GradientSet>(layout);
}

ParameterSet init_params(std::span<const LayerLayout> layout, std::uint64_t seed) {
  auto params = zero_params(layout);
  Rng rng = make_rng(seed);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const double bound = std::sqrt(3.0 / static_cast<double>(layout[i].input_dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& w : params.layers[i].weights) w = dist(rng);
  }
  return params;
}

void check_shapes(const ParameterSet& params, std::span<const LayerLayout> layout) {
  if (params.layers.size() != layout.size()) {
    throw ConfigError("parameter set has " + std::to_string(params.layers.size()) +
                      " layers, layout has " + std::to_string(layout.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& l = params.layers[i];
    if (l.weights.size() != layout[i].input_dim * layout[i].output_dim ||
        l.bias.size() != layout[i].output_dim) {
      throw ConfigError("layer " + std::to_string(i) + " parameter shape mismatch");
    }
  }
}

Trace forward(const ParameterSet& params, std::span<const LayerLayout> layout,
              std::span<const double> input) {
  Trace trace;
  forward_into(params, layout, input, trace);
  return trace;
}

void forward_into(const ParameterSet& params, std::span<const LayerLayout> layout,
                  std::span<const double> input, Trace& trace) {
  if (params.layers.size() != layout.size() || layout.empty()) {
    throw ConfigError("forward: parameter/layout layer count mismatch");
  }
  if (input.size() != layout.front().input_dim) {
    throw ConfigError("forward: input has " + std::to_string(input.size()) +
                      " entries, expected " + std::to_string(layout.front().input_dim));
  }
  for (double x : input) {
    if (!std::isfinite(x)) throw InputError("forward: non-finite input");
  }
  trace.activations.resize(layout.size() + 1);
  trace.activations[0].assign(input.begin(), input.end());
  for (std::size_t li = 0; li < layout.size(); ++li) {
    const auto& l = layout[li];
    const auto& p = params.layers[li];
    const auto& x = trace.activations[li];
    auto& y = trace.activations[li + 1];
    y.resize(l.output_dim);
    for (std::size_t o = 0; o < l.output_dim; ++o) {
      const double* row = p.weights.data() + o * l.input_dim;
      double acc = p.bias[o];
      for (std::size_t i = 0; i < l.input_dim; ++i) acc += row[i] * x[i];
      y[o] = (l.activation == Activation::relu && acc <= 0.0) ? 0.0 : acc;
    }
  }
}

GradientSet backward(const ParameterSet& params, std::span<const LayerLayout> layout,
                     const Trace& trace, std::span<const double> output_gradient) {
  auto grads = zero_gradients(layout);
  backward_accumulate(params, layout, trace, output_gradient, grads);
  return grads;
}

void backward_accumulate(const ParameterSet& params, std::span<const LayerLayout> layout,
                         const Trace& trace, std::span<const double> output_gradient,
                         GradientSet& grads, std::span<double> input_gradient) {
  if (params.layers.size() != layout.size() || grads.layers.size() != layout.size() ||
      trace.activations.size() != layout.size() + 1) {
    throw ConfigError("backward: layer count mismatch between params, grads and trace");
  }
  if (output_gradient.size() != layout.back().output_dim) {
    throw ConfigError("backward: output gradient has wrong length");
  }
  if (!input_gradient.empty() && input_gradient.size() != layout.front().input_dim) {
    throw ConfigError("backward: input gradient buffer has wrong length");
  }

  thread_local std::vector<double> delta;
  thread_local std::vector<double> next_delta;
  delta.assign(output_gradient.begin(), output_gradient.end());

  for (std::size_t li = layout.size(); li-- > 0;) {
    const auto& l = layout[li];
    const auto& p = params.layers[li];
    auto& g = grads.layers[li];
    const auto& x = trace.activations[li];
    const auto& y = trace.activations[li + 1];
    if (l.activation == Activation::relu) {
      // y == 0 exactly when the pre-activation was <= 0.
      for (std::size_t o = 0; o < l.output_dim; ++o) {
        if (y[o] <= 0.0) delta[o] = 0.0;
      }
    }
    const bool need_input = li > 0 || !input_gradient.empty();
    if (need_input) next_delta.assign(l.input_dim, 0.0);
    for (std::size_t o = 0; o < l.output_dim; ++o) {
      const double d = delta[o];
      g.bias[o] += d;
      if (d == 0.0) continue;
      double* grow = g.weights.data() + o * l.input_dim;
      for (std::size_t i = 0; i < l.input_dim; ++i) grow[i] += d * x[i];
      if (need_input) {
        const double* prow = p.weights.data() + o * l.input_dim;
        for (std::size_t i = 0; i < l.input_dim; ++i) next_delta[i] += prow[i] * d;
      }
    }
    if (need_input) delta.swap(next_delta);
  }
  if (!input_gradient.empty()) std::copy(delta.begin(), delta.end(), input_gradient.begin());
}

OptimizerState make_optimizer(std::span<const LayerLayout> layout, const RmsPropConfig& config) {
  if (!(config.decay > 0.0 && config.decay < 1.0)) throw ConfigError("rmsprop decay must lie in (0,1)");
  if (!(config.learning_rate > 0.0)) throw ConfigError("rmsprop learning rate must be positive");
  if (!(config.epsilon > 0.0)) throw ConfigError("rmsprop epsilon must be positive");
  return {config, zero_gradients(layout)};
}

void optimizer_step(ParameterSet& params, const GradientSet& grads, OptimizerState& state) {
  if (params.layers.size() != grads.layers.size() ||
      params.layers.size() != state.accumulator.layers.size()) {
    throw ConfigError("optimizer_step: layer count mismatch");
  }
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    if (params.layers[li].weights.size() != grads.layers[li].weights.size() ||
        params.layers[li].bias.size() != grads.layers[li].bias.size() ||
        params.layers[li].weights.size() != state.accumulator.layers[li].weights.size()) {
      throw ConfigError("optimizer_step: shape mismatch in layer " + std::to_string(li));
    }
  }
  if (!grads.all_finite()) throw TrainingError("optimizer_step: non-finite gradient");

  const auto& c = state.config;
  auto update = [&c](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& acc) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc[i] = c.decay * acc[i] + (1.0 - c.decay) * g[i] * g[i];
      p[i] -= c.learning_rate * g[i] / std::sqrt(acc[i] + c.epsilon);
    }
  };
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    update(params.layers[li].weights, grads.layers[li].weights, state.accumulator.layers[li].weights);
    update(params.layers[li].bias, grads.layers[li].bias, state.accumulator.layers[li].bias);
  }
}

void write_snapshot(std::ostream& out, std::span<const LayerLayout> layout,
                    const ParameterSet& params) {
  check_shapes(params, layout);
  out << "bootdqn-mlp " << kSnapshotVersion << '\n' << "layers " << layout.size() << '\n';
  for (const auto& l : layout) {
    out << l.input_dim << ' ' << l.output_dim << ' ' << to_string(l.activation) << '\n';
  }
  auto row = [&out](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_double(v[i]);
    out << '\n';
  };
  for (const auto& p : params.layers) {
    row(p.weights);
    row(p.bias);
  }
}

Snapshot read_snapshot(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "bootdqn-mlp") throw ConfigError("snapshot: bad header");
  if (version != kSnapshotVersion) {
    throw ConfigError("snapshot: unsupported version " + std::to_string(version));
  }
  std::string word;
  std::size_t n = 0;
  if (!(in >> word >> n) || word != "layers") throw ConfigError("snapshot: missing layer count");
  Snapshot snap;
  for (std::size_t i = 0; i < n; ++i) {
    LayerLayout l;
    std::string act;
    if (!(in >> l.input_dim >> l.output_dim >> act)) throw ConfigError("snapshot: truncated layout");
    l.activation = activation_from_string(act);
    snap.layout.push_back(l);
  }
  snap.params = zero_params(snap.layout);
  std::string token;
  for (auto& p : snap.params.layers) {
    for (auto* v : {&p.weights, &p.bias}) {
      for (auto& x : *v) {
        if (!(in >> token)) throw ConfigError("snapshot: truncated values");
        x = parse_double(token);
      }
    }
  }
  return snap;
}

}  // namespace bootdqn::nn
