#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <tuple>
#include <vector>

#include "hamwave/basis.hpp"
#include "hamwave/error.hpp"
#include "hamwave/rng.hpp"
#include "hamwave/tape.hpp"
#include "hamwave/tensor.hpp"
#include "oracles.hpp"
#include "random_graphs.hpp"

using namespace hamwave;

TEST_CASE("elementwise ops compute the expected forward values") {
  Tape tape;
  const int a = tape.leaf(Tensor::vector({2.0, 3.0}));
  const int b = tape.leaf(Tensor::vector({4.0, 5.0}));
  const int s = tape.add(a, b);
  CHECK(tape.value(s)[0] == 6.0);
  CHECK(tape.value(s)[1] == 8.0);

  const int t = tape.tanh(tape.leaf(Tensor::vector({0.0})));
  CHECK(tape.value(t)[0] == 0.0);

  const int d = tape.dot(tape.leaf(Tensor::vector({1.0, 2.0, 3.0})),
                         tape.leaf(Tensor::vector({4.0, 5.0, 6.0})));
  CHECK(tape.value(d).scalar_value() == 32.0);
}

TEST_CASE("backward of simple reductions") {
  Tape tape;
  const int x = tape.leaf(Tensor::vector({1.0, 2.0, 3.0}));
  const int loss = tape.sum(tape.mul(x, x));
  const Tensor g = tape.gradient_wrt_input(loss, x);
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(4.0));
  CHECK(g[2] == doctest::Approx(6.0));

  Tape tape2;
  const int a = tape2.leaf(Tensor::vector({1.0, 2.0}));
  const int b = tape2.leaf(Tensor::vector({3.0, 4.0}));
  const Tensor ga = tape2.gradient_wrt_input(tape2.dot(a, b), a);
  CHECK(ga[0] == doctest::Approx(3.0));
  CHECK(ga[1] == doctest::Approx(4.0));
}

TEST_CASE("gradient_wrt_input on the designated block") {
  Tape tape;
  const int u = tape.leaf(Tensor::vector({0.3, -0.7, 1.1, 0.2}));
  const Tensor ones = tape.gradient_wrt_input(tape.sum(u), u);
  for (std::size_t i = 0; i < ones.size(); ++i) CHECK(ones[i] == doctest::Approx(1.0));

  Tape tape2;
  const int v = tape2.leaf(Tensor::vector({1.0, -2.0}));
  const int loss = tape2.scalar_mul(tape2.sum(tape2.mul(v, v)), 0.5);
  const Tensor g = tape2.gradient_wrt_input(loss, v);
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(-2.0));
}

TEST_CASE("structured shape errors name the op") {
  Tape tape;
  const int a = tape.leaf(Tensor::vector({1.0, 2.0}));
  const int b = tape.leaf(Tensor::vector({1.0, 2.0, 3.0}));
  CHECK_THROWS_WITH_AS(tape.add(a, b),
                       "tape: add got incompatible shapes [2] and [3]", Error);
  CHECK_THROWS_AS(tape.dot(a, b), Error);
  CHECK_THROWS_AS(tape.slice(a, 1, 5), Error);

  // non-scalar loss rejected
  CHECK_THROWS_AS(tape.backward(a), Error);
  // node from another tape rejected
  Tape other;
  const int loss = other.sum(other.leaf(Tensor::vector({1.0})));
  CHECK_THROWS_AS(other.gradient_wrt_input(loss, 17), Error);
}

TEST_CASE("reverse-mode gradients match finite differences on 120 random graphs") {
  CHECK(random_graphs::worst_gradient_error(120) < 1e-6);
}

TEST_CASE("gradients are additive across summed losses") {
  Rng rng(3);
  Tape tape;
  std::vector<double> vals(5);
  for (double& v : vals) v = rng.uniform(-2.0, 2.0);
  const int x = tape.leaf(Tensor::vector(vals));
  const int f = tape.sum(tape.mul(x, x));
  const int g = tape.dot(x, tape.leaf(Tensor::vector({1.0, -1.0, 2.0, 0.5, 3.0})));
  const int both = tape.add(f, g);
  const Tensor grad_both = tape.gradient_wrt_input(both, x);
  const Tensor grad_f = tape.gradient_wrt_input(f, x);
  const Tensor grad_g = tape.gradient_wrt_input(g, x);
  for (std::size_t i = 0; i < vals.size(); ++i)
    CHECK(grad_both[i] == doctest::Approx(grad_f[i] + grad_g[i]).epsilon(1e-14));
}

TEST_CASE("replaying the same graph is bit-identical") {
  auto play = [](std::vector<double>* loss_and_grad) {
    random_graphs::Graph g = random_graphs::make(42);
    std::vector<Tensor> grads;
    const double loss = random_graphs::run(g, true, &grads);
    loss_and_grad->push_back(loss);
    for (const Tensor& t : grads)
      for (std::size_t i = 0; i < t.size(); ++i) loss_and_grad->push_back(t[i]);
  };
  std::vector<double> first, second;
  play(&first);
  play(&second);
  REQUIRE(first.size() == second.size());
  CHECK(std::memcmp(first.data(), second.data(), first.size() * sizeof(double)) == 0);
}

TEST_CASE("adjoints recorded on the tape stay differentiable (double backward)") {
  // phi(W, x) = <c, dW/dx-gradient of 0.5 || tanh(W x) ||^2>; checked against
  // finite differences of phi in both W and x
  Rng rng(11);
  const int m = 3, n = 4;
  std::vector<double> wv(static_cast<std::size_t>(m) * n), xv(n), cv(n);
  for (double& v : wv) v = rng.uniform(-1.0, 1.0);
  for (double& v : xv) v = rng.uniform(-1.0, 1.0);
  for (double& v : cv) v = rng.uniform(-1.0, 1.0);

  auto phi = [&](std::span<const double> w_in, std::span<const double> x_in) {
    Tape tape;
    const int W = tape.leaf(Tensor::matrix(m, n, {w_in.begin(), w_in.end()}));
    const int x = tape.leaf(Tensor::vector({x_in.begin(), x_in.end()}));
    const int y = tape.tanh(tape.matmul(W, x));
    const int loss = tape.scalar_mul(tape.dot(y, y), 0.5);
    const int targets[] = {x};
    const std::vector<int> gx = tape.backward_on_tape(loss, targets);
    return std::make_tuple(std::move(tape), gx[0], W, x);
  };

  auto phi_value = [&](std::span<const double> w_in, std::span<const double> x_in) {
    auto [tape, gx, W, x] = phi(w_in, x_in);
    return tape.value(tape.dot(gx, tape.leaf(Tensor::vector(cv)))).scalar_value();
  };

  auto [tape, gx, W, x] = phi(wv, xv);
  const int outer = tape.dot(gx, tape.leaf(Tensor::vector(cv)));
  const Tensor gW = tape.gradient_wrt_input(outer, W);
  const Tensor gX = tape.gradient_wrt_input(outer, x);

  const double step = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < wv.size(); ++i) {
    std::vector<double> plus = wv, minus = wv;
    plus[i] += step;
    minus[i] -= step;
    const double fd = (phi_value(plus, xv) - phi_value(minus, xv)) / (2.0 * step);
    worst = std::max(worst, std::abs(fd - gW[i]) / std::max(1.0, std::abs(fd)));
  }
  for (std::size_t i = 0; i < xv.size(); ++i) {
    std::vector<double> plus = xv, minus = xv;
    plus[i] += step;
    minus[i] -= step;
    const double fd = (phi_value(wv, plus) - phi_value(wv, minus)) / (2.0 * step);
    worst = std::max(worst, std::abs(fd - gX[i]) / std::max(1.0, std::abs(fd)));
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("tensor construction rejects non-finite input data") {
  CHECK_THROWS_AS(Tensor::vector({1.0, std::nan("")}), Error);
  CHECK_THROWS_AS(Tensor::scalar(std::numeric_limits<double>::infinity()), Error);
}
