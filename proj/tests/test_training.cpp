#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <vector>

#include "hamwave/error.hpp"
#include "hamwave/functional.hpp"
#include "hamwave/rng.hpp"
#include "hamwave/training.hpp"
#include "hamwave/wave_data.hpp"
#include "oracles.hpp"

using namespace hamwave;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Synthetic dataset whose lattice values are supplied directly.
Dataset synthetic_dataset(int nx, int nt, double t_max,
                          const std::function<double(double, double)>& u_of,
                          const std::function<double(double, double)>& ut_of) {
  DatasetConfig cfg;
  cfg.n_traj = 1;
  cfg.modes = 1;
  cfg.nx = nx;
  cfg.nt = nt;
  cfg.t_max = t_max;
  cfg.amp = 1.0;
  cfg.seed = 0;
  Trajectory tr;
  tr.f = InitialCondition{{0.0}, {0.0}};
  tr.u.resize(static_cast<std::size_t>(nt + 1) * nx);
  tr.ut.resize(tr.u.size());
  const double dt = t_max / nt, h = 1.0 / nx;
  for (int j = 0; j <= nt; ++j)
    for (int i = 0; i < nx; ++i) {
      tr.u[static_cast<std::size_t>(j) * nx + i] = u_of(dt * j, h * i);
      tr.ut[static_cast<std::size_t>(j) * nx + i] = ut_of(dt * j, h * i);
    }
  std::vector<Trajectory> trs;
  trs.push_back(std::move(tr));
  return Dataset(cfg, std::move(trs));
}

DynamicsSample sample_of(const Dataset& ds, int traj, int j) {
  DynamicsSample s;
  s.u = ds.u_at(traj, j);
  s.ut = ds.ut_at(traj, j);
  auto [du, dut] = time_derivatives(ds, traj, j);
  s.du = std::move(du);
  s.dut = std::move(dut);
  return s;
}

}  // namespace

TEST_CASE("time derivatives are exact on polynomial motion") {
  // linear in time: exact everywhere including the one-sided ends
  const Dataset lin = synthetic_dataset(
      8, 10, 1.0, [](double t, double x) { return 3.0 * t + x; },
      [](double t, double) { return -2.0 * t; });
  for (int j : {0, 1, 5, 9, 10}) {
    auto [du, dut] = time_derivatives(lin, 0, j);
    for (int i = 0; i < 8; ++i) {
      CHECK(du[static_cast<std::size_t>(i)] == doctest::Approx(3.0).epsilon(1e-12));
      CHECK(dut[static_cast<std::size_t>(i)] == doctest::Approx(-2.0).epsilon(1e-12));
    }
  }

  // quadratic in time: the order-2 stencils are still exact
  const Dataset quad = synthetic_dataset(
      8, 10, 1.0, [](double t, double x) { return t * t + x; }, [](double, double) { return 0.0; });
  for (int j : {0, 4, 10}) {
    auto [du, dut] = time_derivatives(quad, 0, j);
    const double t = quad.time(j);
    for (int i = 0; i < 8; ++i) CHECK(du[static_cast<std::size_t>(i)] == doctest::Approx(2.0 * t).epsilon(1e-10));
    (void)dut;
  }

  CHECK_THROWS_AS(time_derivatives(lin, 0, 11), Error);
}

TEST_CASE("lattice rates converge to the stored velocity at second order") {
  auto rate_error = [](int nt) {
    DatasetConfig cfg;
    cfg.n_traj = 1;
    cfg.modes = 2;
    cfg.nx = 16;
    cfg.nt = nt;
    cfg.t_max = 1.0;
    cfg.amp = 1.0;
    cfg.seed = 5;
    const Dataset ds = generate_dataset(cfg);
    double worst = 0.0;
    for (int j = 1; j < nt; ++j) {
      auto [du, dut] = time_derivatives(ds, 0, j);
      (void)dut;
      auto ut = ds.ut_at(0, j);
      for (int i = 0; i < 16; ++i)
        worst = std::max(worst, std::abs(du[static_cast<std::size_t>(i)] -
                                         ut[static_cast<std::size_t>(i)]));
    }
    return worst;
  };
  const double e40 = rate_error(40), e80 = rate_error(80), e160 = rate_error(160);
  CHECK(oracles::observed_order(e40, e80) >= 1.8);
  CHECK(oracles::observed_order(e80, e160) >= 1.8);
}

TEST_CASE("dynamics loss of the exact Hamiltonian with exact rates sits at the discretization floor") {
  // K = 1 sine of moderate amplitude on a fine grid; rates are analytic
  const int n = 128;
  DatasetConfig cfg;
  cfg.n_traj = 1;
  cfg.modes = 1;
  cfg.nx = n;
  cfg.nt = 400;
  cfg.t_max = 2.0;
  cfg.amp = 0.1;
  cfg.seed = 23;
  const Dataset ds = generate_dataset(cfg);
  const NodalBasis basis(n, 0.0, 1.0);
  auto gram = std::make_shared<const GramMatrix>(basis);

  std::vector<DynamicsSample> batch;
  const InitialCondition& f = ds.trajectory(0).f;
  for (int j : {40, 120, 200, 333}) {
    DynamicsSample s;
    s.u = ds.u_at(0, j);
    s.ut = ds.ut_at(0, j);
    const double t = ds.time(j);
    s.du.resize(static_cast<std::size_t>(n));
    s.dut.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      s.du[static_cast<std::size_t>(i)] = dalembert(f, t, ds.h() * i).ut;   // du/dt = u_t
      s.dut[static_cast<std::size_t>(i)] = dalembert_utt(f, t, ds.h() * i); // du_t/dt = u_xx
    }
    batch.push_back(std::move(s));
  }

  Tape tape;
  ExactWaveFunctional exact(basis);
  exact.bind(tape);
  const double loss = tape.value(dynamics_loss_node(tape, exact, gram, batch)).scalar_value();
  CHECK(loss < 1e-6);
  CHECK(loss >= 0.0);
}

TEST_CASE("dynamics loss of a zero model equals the mean scaled rate norm") {
  const int n = 16;
  DatasetConfig cfg;
  cfg.n_traj = 2;
  cfg.modes = 2;
  cfg.nx = n;
  cfg.nt = 20;
  cfg.t_max = 1.0;
  cfg.amp = 0.8;
  cfg.seed = 9;
  const Dataset ds = generate_dataset(cfg);
  const NodalBasis basis(n, 0.0, 1.0);
  auto gram = std::make_shared<const GramMatrix>(basis);
  const QuadratureRule rule = trapezoid_rule(basis);

  DeepONetModel zero = init_model(n, 4, 8, 2, 3);
  for (std::size_t i = 0; i < zero.branch.weights.back().size(); ++i)
    zero.branch.weights.back()[i] = 0.0;
  for (std::size_t i = 0; i < zero.branch.biases.back().size(); ++i)
    zero.branch.biases.back()[i] = 0.0;

  std::vector<DynamicsSample> batch;
  for (int j : {3, 7, 11}) batch.push_back(sample_of(ds, 0, j));
  batch.push_back(sample_of(ds, 1, 9));

  Tape tape;
  DeepONetFunctional fn(zero, rule);
  fn.bind(tape);
  const double loss = tape.value(dynamics_loss_node(tape, fn, gram, batch)).scalar_value();

  double expected = 0.0;
  for (const DynamicsSample& s : batch) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      acc += s.du[static_cast<std::size_t>(i)] * s.du[static_cast<std::size_t>(i)] +
             s.dut[static_cast<std::size_t>(i)] * s.dut[static_cast<std::size_t>(i)];
    expected += basis.h() * acc;
  }
  expected /= static_cast<double>(batch.size());
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));

  // a live model still produces a nonnegative loss
  const DeepONetModel live = init_model(n, 4, 8, 2, 4);
  Tape tape2;
  DeepONetFunctional fn2(live, rule);
  fn2.bind(tape2);
  CHECK(tape2.value(dynamics_loss_node(tape2, fn2, gram, batch)).scalar_value() >= 0.0);
}

TEST_CASE("full-loss parameter gradients match finite differences") {
  const int n = 8;
  DatasetConfig cfg;
  cfg.n_traj = 1;
  cfg.modes = 1;
  cfg.nx = n;
  cfg.nt = 10;
  cfg.t_max = 1.0;
  cfg.amp = 0.5;
  cfg.seed = 31;
  const Dataset ds = generate_dataset(cfg);
  const NodalBasis basis(n, 0.0, 1.0);
  auto gram = std::make_shared<const GramMatrix>(basis);
  const QuadratureRule rule = trapezoid_rule(basis);

  DeepONetModel model = init_model(n, 3, 6, 3, 17);
  std::vector<DynamicsSample> batch;
  for (int j : {2, 5, 8}) batch.push_back(sample_of(ds, 0, j));

  auto loss_value = [&] {
    Tape tape;
    DeepONetFunctional fn(model, rule);
    fn.bind(tape);
    return tape.value(dynamics_loss_node(tape, fn, gram, batch)).scalar_value();
  };

  // reverse-mode gradients for every parameter tensor
  Tape tape;
  DeepONetFunctional fn(model, rule);
  fn.bind(tape);
  const int loss = dynamics_loss_node(tape, fn, gram, batch);
  const std::vector<int> param_nodes = fn.net().all_params();
  const std::vector<Tensor> adj = tape.backward(loss, param_nodes);

  // spot-check a handful of entries in each network against finite differences
  Rng pick(3);
  std::vector<Tensor*> tensors;
  for (MlpParams* mlp : {&model.branch, &model.trunk}) {
    for (Tensor& w : mlp->weights) tensors.push_back(&w);
    for (Tensor& b : mlp->biases) tensors.push_back(&b);
  }
  REQUIRE(tensors.size() == param_nodes.size());
  double worst = 0.0;
  for (std::size_t p = 0; p < tensors.size(); ++p) {
    const Tensor& g = adj[static_cast<std::size_t>(param_nodes[p])];
    for (int rep = 0; rep < 2; ++rep) {
      const std::size_t e = pick.index(tensors[p]->size());
      const double keep = (*tensors[p])[e];
      const double step = 1e-6;
      (*tensors[p])[e] = keep + step;
      const double fp = loss_value();
      (*tensors[p])[e] = keep - step;
      const double fm = loss_value();
      (*tensors[p])[e] = keep;
      const double fd = (fp - fm) / (2.0 * step);
      const double ad = g.empty() ? 0.0 : g[e];
      worst = std::max(worst, std::abs(ad - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("density loss basics") {
  const int n = 12;
  const NodalBasis basis(n, 0.0, 1.0);
  const QuadratureRule rule = trapezoid_rule(basis);
  DatasetConfig cfg;
  cfg.n_traj = 1;
  cfg.modes = 1;
  cfg.nx = n;
  cfg.nt = 10;
  cfg.t_max = 1.0;
  cfg.amp = 0.5;
  cfg.seed = 2;
  const Dataset ds = generate_dataset(cfg);
  std::vector<DynamicsSample> batch;
  for (int j : {1, 4, 8}) batch.push_back(sample_of(ds, 0, j));

  // constant-density stub: predictions kappa everywhere
  DeepONetModel stub = init_model(n, 4, 8, 2, 2);
  const double kappa = 1.5;
  for (MlpParams* mlp : {&stub.branch, &stub.trunk}) {
    for (std::size_t i = 0; i < mlp->weights.back().size(); ++i) mlp->weights.back()[i] = 0.0;
    for (std::size_t i = 0; i < mlp->biases.back().size(); ++i) mlp->biases.back()[i] = 0.0;
  }
  stub.branch.biases.back()[0] = kappa;
  stub.trunk.biases.back()[0] = 1.0;

  // targets equal to the prediction give exactly zero
  std::vector<double> targets(batch.size() * rule.nodes.size(), kappa);
  {
    Tape tape;
    DeepONetOnTape net(tape, stub);
    const double loss =
        tape.value(density_loss_node(tape, net, batch, rule.nodes, targets)).scalar_value();
    CHECK(loss == 0.0);
  }

  // zero model against targets tau gives mean tau^2
  DeepONetModel zero = stub;
  zero.branch.biases.back()[0] = 0.0;
  Rng rng(8);
  for (double& t : targets) t = rng.uniform(-2.0, 2.0);
  double mean_sq = 0.0;
  for (double t : targets) mean_sq += t * t;
  mean_sq /= static_cast<double>(targets.size());
  {
    Tape tape;
    DeepONetOnTape net(tape, zero);
    const double loss =
        tape.value(density_loss_node(tape, net, batch, rule.nodes, targets)).scalar_value();
    CHECK(loss == doctest::Approx(mean_sq).epsilon(1e-12));
  }
}

TEST_CASE("one density-mode step decreases the loss for nearly all seeds") {
  DatasetConfig cfg;
  cfg.n_traj = 2;
  cfg.modes = 1;
  cfg.nx = 8;
  cfg.nt = 10;
  cfg.t_max = 1.0;
  cfg.amp = 0.5;
  cfg.seed = 4;
  const Dataset ds = generate_dataset(cfg);

  int decreased = 0;
  const int trials = 100;
  for (int seed = 1; seed <= trials; ++seed) {
    DeepONetModel model = init_model(8, 3, 8, 2, static_cast<std::uint64_t>(seed));
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.epochs = 1;
    tc.batch_size = 8;
    tc.loss_mode = LossMode::density;
    tc.seed = static_cast<std::uint64_t>(seed);
    const TrainReport rep = train(model, ds, tc);
    if (rep.final_loss < rep.initial_loss()) ++decreased;
  }
  CHECK(decreased >= 95);
}

TEST_CASE("single-trajectory overfit at desk scale") {
  DatasetConfig cfg;
  cfg.n_traj = 1;
  cfg.modes = 1;
  cfg.nx = 16;
  cfg.nt = 100;
  cfg.t_max = 2.0;
  cfg.amp = 0.15;
  cfg.seed = 6;
  const Dataset ds = generate_dataset(cfg);

  DeepONetModel model = init_model(16, 8, 32, 3, 11);
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.epochs = 2000;
  tc.batch_size = 32;
  tc.seed = 12;
  const TrainReport rep = train(model, ds, tc);
  CHECK(rep.initial_loss() / rep.final_loss >= 100.0);
}

TEST_CASE("zero learning rate leaves parameters and losses frozen") {
  DatasetConfig cfg;
  cfg.n_traj = 2;
  cfg.modes = 1;
  cfg.nx = 8;
  cfg.nt = 10;
  cfg.t_max = 1.0;
  cfg.amp = 0.5;
  cfg.seed = 14;
  const Dataset ds = generate_dataset(cfg);

  DeepONetModel model = init_model(8, 3, 8, 2, 15);
  const DeepONetModel before = model;
  TrainConfig tc;
  tc.learning_rate = 0.0;
  tc.epochs = 20;
  tc.batch_size = 4;
  tc.seed = 16;
  const TrainReport rep = train(model, ds, tc);

  for (int l = 0; l < model.branch.n_layers(); ++l)
    CHECK(std::memcmp(model.branch.weights[static_cast<std::size_t>(l)].data(),
                      before.branch.weights[static_cast<std::size_t>(l)].data(),
                      model.branch.weights[static_cast<std::size_t>(l)].size() * sizeof(double)) ==
          0);
  for (double l : rep.losses) CHECK(l == rep.losses.front());
  CHECK(rep.final_loss == rep.losses.front());
}

TEST_CASE("training is deterministic given config, seed, and data") {
  DatasetConfig cfg;
  cfg.n_traj = 3;
  cfg.modes = 1;
  cfg.nx = 8;
  cfg.nt = 12;
  cfg.t_max = 1.0;
  cfg.amp = 0.4;
  cfg.seed = 21;
  const Dataset ds = generate_dataset(cfg);

  auto run = [&] {
    DeepONetModel model = init_model(8, 3, 8, 2, 22);
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.epochs = 30;
    tc.batch_size = 8;
    tc.seed = 23;
    const TrainReport rep = train(model, ds, tc);
    return std::make_pair(rep.losses, model);
  };
  auto [losses1, model1] = run();
  auto [losses2, model2] = run();
  CHECK(losses1 == losses2);
  for (int l = 0; l < model1.branch.n_layers(); ++l)
    CHECK(std::memcmp(model1.branch.weights[static_cast<std::size_t>(l)].data(),
                      model2.branch.weights[static_cast<std::size_t>(l)].data(),
                      model1.branch.weights[static_cast<std::size_t>(l)].size() * sizeof(double)) ==
          0);
}

TEST_CASE("resume from a checkpoint continues the loss series smoothly") {
  DatasetConfig cfg;
  cfg.n_traj = 2;
  cfg.modes = 1;
  cfg.nx = 8;
  cfg.nt = 20;
  cfg.t_max = 1.0;
  cfg.amp = 0.3;
  cfg.seed = 33;
  const Dataset ds = generate_dataset(cfg);

  DeepONetModel model = init_model(8, 4, 12, 3, 34);
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.epochs = 60;
  tc.batch_size = 8;
  tc.seed = 35;
  const TrainReport first = train(model, ds, tc, "", "resume_ckpt.bin");

  DeepONetModel resumed = load_model("resume_ckpt.bin");
  const TrainReport second = train(resumed, ds, tc);
  CHECK(second.losses.front() <= 2.0 * first.final_loss);
  CHECK(second.losses.front() == doctest::Approx(first.final_loss).epsilon(1e-12));
  std::remove("resume_ckpt.bin");
}

TEST_CASE("a diverging run aborts with a numeric diagnostic naming the epoch") {
  DatasetConfig cfg;
  cfg.n_traj = 1;
  cfg.modes = 1;
  cfg.nx = 8;
  cfg.nt = 10;
  cfg.t_max = 1.0;
  cfg.amp = 0.5;
  cfg.seed = 44;
  const Dataset ds = generate_dataset(cfg);

  DeepONetModel model = init_model(8, 3, 8, 2, 45);
  TrainConfig tc;
  tc.learning_rate = 1e200;  // one step overflows the quadratic residual
  tc.epochs = 3;
  tc.batch_size = 4;
  try {
    train(model, ds, tc);
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numeric);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }

  // non-finite parameters are rejected up front as well
  DeepONetModel poisoned = init_model(8, 3, 8, 2, 46);
  poisoned.branch.weights[0].data()[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig ok;
  CHECK_THROWS_AS(train(poisoned, ds, ok), Error);
}

TEST_CASE("grid mismatch between model and dataset is rejected") {
  DatasetConfig cfg;
  cfg.n_traj = 1;
  cfg.modes = 1;
  cfg.nx = 16;
  cfg.nt = 10;
  cfg.t_max = 1.0;
  cfg.amp = 0.5;
  cfg.seed = 50;
  const Dataset ds = generate_dataset(cfg);
  DeepONetModel model = init_model(8, 3, 8, 2, 51);
  TrainConfig tc;
  try {
    train(model, ds, tc);
    FAIL("expected a mismatch error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::mismatch);
  }
}
