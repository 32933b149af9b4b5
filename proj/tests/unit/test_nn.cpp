#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "bootdqn/error.hpp"
#include "bootdqn/nn.hpp"
#include "oracles.hpp"

using namespace bootdqn;
using namespace bootdqn::nn;

TEST_CASE("init law: bounds, variance and zero biases") {
  {
    const auto layout = mlp_layout(3, std::vector<std::size_t>{}, 50);
    const auto p = init_params(layout, 1);
    for (double w : p.layers[0].weights) {
      CHECK(w >= -1.0);
      CHECK(w <= 1.0);
    }
  }
  const auto layout = mlp_layout(4, std::vector<std::size_t>{}, 25000);
  const auto p = init_params(layout, 2);
  const auto& w = p.layers[0].weights;
  REQUIRE(w.size() == 100000);
  double mean = 0.0;
  for (double v : w) mean += v;
  mean /= static_cast<double>(w.size());
  double var = 0.0;
  for (double v : w) var += (v - mean) * (v - mean);
  var /= static_cast<double>(w.size() - 1);
  CHECK(std::abs(var - 0.25) <= 0.01);
  for (double b : p.layers[0].bias) CHECK(b == 0.0);
}

TEST_CASE("init is a pure function of layout and seed") {
  const std::size_t hidden[] = {8, 8};
  const auto layout = mlp_layout(5, hidden, 3);
  CHECK(init_params(layout, 42) == init_params(layout, 42));
  CHECK_FALSE(init_params(layout, 42) == init_params(layout, 43));
}

TEST_CASE("forward: zero net, identity layer, hand-computed relu net") {
  const std::size_t hidden[] = {3};
  const auto layout = mlp_layout(2, hidden, 2);
  const auto zero = zero_params(layout);
  const std::vector<double> x{0.7, -1.3};
  const auto zero_trace = forward(zero, layout, x);
  for (double v : zero_trace.output()) CHECK(v == 0.0);

  Layout ident{{3, 3, Activation::identity}};
  auto eye = zero_params(ident);
  for (std::size_t i = 0; i < 3; ++i) eye.layers[0].weights[i * 3 + i] = 1.0;
  const std::vector<double> v{1.5, -2.0, 0.25};
  const auto eye_trace = forward(eye, ident, v);
  const auto out = eye_trace.output();
  CHECK(std::vector<double>(out.begin(), out.end()) == v);

  // h = relu(W1 x + b1) = relu([1-2, 0.5+1+1, -1+0.1]) = [0, 2.5, 0]
  // y = W2 h + b2 = [2*2.5 + 0.5, -1*2.5] = [5.5, -2.5]
  auto p = zero_params(layout);
  p.layers[0].weights = {1, 2, 0.5, -1, -1, 0};
  p.layers[0].bias = {0.0, 1.0, 0.1};
  p.layers[1].weights = {0, 2, 0, 0, -1, 0};
  p.layers[1].bias = {0.5, 0.0};
  const std::vector<double> in{1.0, -1.0};
  // layer 1: [1*1 + 2*(-1) + 0, 0.5*1 + (-1)(-1) + 1, -1*1 + 0 + 0.1] = [-1, 2.5, -0.9]
  const auto trace = forward(p, layout, in);
  const auto y = trace.output();
  CHECK(y[0] == 5.5);
  CHECK(y[1] == -2.5);
}

TEST_CASE("forward errors") {
  const std::size_t hidden[] = {4};
  const auto layout = mlp_layout(3, hidden, 2);
  const auto p = init_params(layout, 0);
  CHECK_THROWS_AS(forward(p, layout, std::vector<double>{1.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(forward(p, layout, std::vector<double>{1.0, std::nan(""), 0.0}), InputError);
  CHECK_THROWS_AS(forward(p, layout, std::vector<double>{1.0, std::numeric_limits<double>::infinity(), 0.0}),
                  InputError);
  auto bad = p;
  bad.layers[1].bias.pop_back();
  CHECK_THROWS_AS(check_shapes(bad, layout), ConfigError);
  CHECK_THROWS_AS(validate_layout(Layout{{3, 4, Activation::relu}, {5, 2, Activation::identity}}), ConfigError);
}

TEST_CASE("backward: zero output gradient and single linear layer outer product") {
  const std::size_t hidden[] = {6};
  const auto layout = mlp_layout(4, hidden, 3);
  const auto p = init_params(layout, 9);
  const std::vector<double> x{0.1, 0.2, -0.3, 0.4};
  const auto tr = forward(p, layout, x);
  const auto g0 = backward(p, layout, tr, std::vector<double>(3, 0.0));
  for (const auto& L : g0.layers) {
    for (double v : L.weights) CHECK(v == 0.0);
    for (double v : L.bias) CHECK(v == 0.0);
  }

  Layout lin{{3, 2, Activation::identity}};
  const auto q = init_params(lin, 4);
  const std::vector<double> u{1.0, -2.0, 0.5};
  const std::vector<double> g{0.3, -0.7};
  const auto grad = backward(q, lin, forward(q, lin, u), g);
  for (std::size_t o = 0; o < 2; ++o) {
    CHECK(grad.layers[0].bias[o] == g[o]);
    for (std::size_t i = 0; i < 3; ++i) CHECK(grad.layers[0].weights[o * 3 + i] == g[o] * u[i]);
  }
}

TEST_CASE("backward matches central finite differences on random nets") {
  Rng rng = make_rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::size_t> hidden(std::uniform_int_distribution<int>(0, 2)(rng));
    for (auto& h : hidden) h = dim(rng);
    const auto layout = mlp_layout(dim(rng), hidden, dim(rng));
    auto p = init_params(layout, rng());
    // Random biases keep pre-activations off the relu kink, where central
    // differences see half a slope.
    for (auto& L : p.layers)
      for (auto& b : L.bias) b = n01(rng);
    std::vector<double> x(layout.front().input_dim);
    for (auto& v : x) v = n01(rng);
    std::vector<double> g(layout.back().output_dim);
    for (auto& v : g) v = n01(rng);
    const auto analytic = backward(p, layout, forward(p, layout, x), g);
    const auto numeric = oracle::finite_difference_gradient(p, layout, x, g);
    CHECK(oracle::max_relative_error(analytic, numeric) <= 1e-4);
  }
}

TEST_CASE("relu subgradient at zero is zero") {
  Layout layout{{1, 1, Activation::relu}, {1, 1, Activation::identity}};
  auto p = zero_params(layout);
  p.layers[0].weights = {1.0};
  p.layers[1].weights = {1.0};
  const auto grad = backward(p, layout, forward(p, layout, std::vector<double>{0.0}), std::vector<double>{1.0});
  CHECK(grad.layers[0].weights[0] == 0.0);
  CHECK(grad.layers[0].bias[0] == 0.0);
  CHECK(grad.layers[1].weights[0] == 0.0);
  CHECK(grad.layers[1].bias[0] == 1.0);
}

TEST_CASE("input gradient from backward_accumulate matches finite differences") {
  const std::size_t hidden[] = {5};
  const auto layout = mlp_layout(3, hidden, 2);
  const auto p = init_params(layout, 21);
  const std::vector<double> x{0.3, -0.6, 0.9};
  const std::vector<double> g{1.0, -0.5};
  auto grads = zero_gradients(layout);
  std::vector<double> dx(3);
  backward_accumulate(p, layout, forward(p, layout, x), g, grads, dx);
  for (std::size_t i = 0; i < 3; ++i) {
    auto up = x, down = x;
    up[i] += 1e-5;
    down[i] -= 1e-5;
    const double fd = (oracle::dot(oracle::mlp_output(p, layout, up), g) -
                       oracle::dot(oracle::mlp_output(p, layout, down), g)) / 2e-5;
    CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("rmsprop scalar step and convergence of the step size") {
  Layout layout{{1, 1, Activation::identity}};
  auto p = zero_params(layout);
  p.layers[0].weights = {1.0};
  auto opt = make_optimizer(layout, {0.95, 0.1, 1e-8});
  auto g = zero_gradients(layout);
  g.layers[0].weights = {2.0};
  optimizer_step(p, g, opt);
  CHECK(opt.accumulator.layers[0].weights[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(p.layers[0].weights[0] == doctest::Approx(1.0 - 0.1 * 2.0 / std::sqrt(0.2 + 1e-8)).epsilon(1e-15));

  // Iterating acc <- 0.95 acc + 0.05 g^2 from 0 gives acc_n = g^2 (1 - 0.95^n).
  for (int n = 0; n < 400; ++n) optimizer_step(p, g, opt);
  const double closed = 4.0 * (1.0 - std::pow(0.95, 401));
  CHECK(opt.accumulator.layers[0].weights[0] == doctest::Approx(closed).epsilon(1e-12));
  const double before = p.layers[0].weights[0];
  optimizer_step(p, g, opt);
  CHECK(before - p.layers[0].weights[0] == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("optimizer rejects non-finite gradients without touching state") {
  Layout layout{{2, 1, Activation::identity}};
  auto p = init_params(layout, 3);
  const auto keep = p;
  auto opt = make_optimizer(layout, {});
  auto g = zero_gradients(layout);
  g.layers[0].weights[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(optimizer_step(p, g, opt), TrainingError);
  CHECK(p == keep);
}

TEST_CASE("snapshot round trip is exact") {
  const std::size_t hidden[] = {7, 3};
  const auto layout = mlp_layout(4, hidden, 2);
  const auto p = init_params(layout, 77);
  std::stringstream ss;
  write_snapshot(ss, layout, p);
  const auto snap = read_snapshot(ss);
  CHECK(snap.layout == layout);
  CHECK(snap.params == p);
  std::stringstream bad("not-a-snapshot 1\n");
  CHECK_THROWS(read_snapshot(bad));
}
