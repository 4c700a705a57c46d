// SPDX-License-Identifier: Apache-2.0
#include "hamwave/dynamics.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>

#include "hamwave/error.hpp"
#include "hamwave/functional.hpp"
#include "hamwave/hash.hpp"

namespace hamwave {

int central_difference_node(Tape& tape, int v, int n, double h) {
  const int left = tape.concat(tape.slice(v, 1, n - 1), tape.slice(v, 0, 1));
  const int right = tape.concat(tape.slice(v, n - 1, 1), tape.slice(v, 0, n - 1));
  return tape.scalar_mul(tape.sub(left, right), 1.0 / (2.0 * h));
}

int ExactWaveFunctional::evaluate(int u, int ut) const {
  if (!tape_) fail_invalid("functional: bind was not called");
  Tape& tape = *tape_;
  const int du = central_difference_node(tape, u, n_, h_);
  const int quad = tape.add(tape.dot(du, du), tape.dot(ut, ut));
  return tape.scalar_mul(quad, 0.5 * h_);
}

namespace {

void check_state(const State& w, int n, const char* who) {
  if (static_cast<int>(w.u.size()) != n || static_cast<int>(w.ut.size()) != n)
    fail_invalid(std::string(who) + ": state does not match the system grid");
}

bool finite_state(const State& w) {
  for (double v : w.u)
    if (!std::isfinite(v)) return false;
  for (double v : w.ut)
    if (!std::isfinite(v)) return false;
  return true;
}

FieldVector central_difference(std::span<const double> v, double h) {
  const int n = static_cast<int>(v.size());
  FieldVector d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int l = (i + n - 1) % n;
    const int r = (i + 1) % n;
    d[static_cast<std::size_t>(i)] =
        (v[static_cast<std::size_t>(r)] - v[static_cast<std::size_t>(l)]) / (2.0 * h);
  }
  return d;
}

FieldVector second_difference(std::span<const double> v, double h) {
  const int n = static_cast<int>(v.size());
  FieldVector d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int l = (i + n - 1) % n;
    const int r = (i + 1) % n;
    d[static_cast<std::size_t>(i)] = (v[static_cast<std::size_t>(r)] -
                                      2.0 * v[static_cast<std::size_t>(i)] +
                                      v[static_cast<std::size_t>(l)]) /
                                     (h * h);
  }
  return d;
}

}  // namespace

HamiltonianSystem::HamiltonianSystem(HamiltonianSource source, const NodalBasis& basis,
                                     GramMode mode)
    : source_(source), basis_(basis), gram_(std::make_shared<GramMatrix>(basis, mode)) {}

HamiltonianSystem HamiltonianSystem::learned(const DeepONetModel& model, const NodalBasis& basis,
                                             GramMode mode) {
  model.validate();
  if (model.nx != basis.n()) fail_mismatch("dynamics: model grid does not match basis grid");
  HamiltonianSystem sys(HamiltonianSource::learned, basis, mode);
  sys.model_ = std::make_shared<DeepONetModel>(model);
  // trunk outputs at the quadrature nodes do not depend on the state; combine
  // them once so each field evaluation only runs the branch network
  const QuadratureRule rule = trapezoid_rule(basis);
  sys.psi_bar_.assign(static_cast<std::size_t>(model.p), 0.0);
  for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
    const std::vector<double> psi = mlp_eval(model.trunk, {&rule.nodes[m], 1});
    for (int k = 0; k < model.p; ++k)
      sys.psi_bar_[static_cast<std::size_t>(k)] += rule.weights[m] * psi[static_cast<std::size_t>(k)];
  }
  return sys;
}

HamiltonianSystem HamiltonianSystem::exact_pipeline(const NodalBasis& basis, GramMode mode) {
  return HamiltonianSystem(HamiltonianSource::exact_pipeline, basis, mode);
}

HamiltonianSystem HamiltonianSystem::exact_direct(const NodalBasis& basis) {
  return HamiltonianSystem(HamiltonianSource::exact_direct, basis, GramMode::exact);
}

double HamiltonianSystem::value(const State& w) const {
  check_state(w, basis_.n(), "hamiltonian value");
  switch (source_) {
    case HamiltonianSource::learned: {
      std::vector<double> in(w.u.begin(), w.u.end());
      in.insert(in.end(), w.ut.begin(), w.ut.end());
      const std::vector<double> c = mlp_eval(model_->branch, in);
      double s = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * psi_bar_[k];
      return s;
    }
    case HamiltonianSource::exact_pipeline:
    case HamiltonianSource::exact_direct: {
      const FieldVector du = central_difference(w.u, basis_.h());
      double s = 0.0;
      for (std::size_t i = 0; i < du.size(); ++i) s += du[i] * du[i] + w.ut[i] * w.ut[i];
      return 0.5 * basis_.h() * s;
    }
  }
  fail_invalid("dynamics: unknown source");
}

std::pair<FieldVector, FieldVector> HamiltonianSystem::variational_gradient(const State& w) const {
  check_state(w, basis_.n(), "variational_gradient");
  const int n = basis_.n();
  if (source_ == HamiltonianSource::exact_direct) {
    FieldVector du = second_difference(w.u, basis_.h());
    for (double& v : du) v = -v;  // dH/du = -u_xx
    return {std::move(du), FieldVector(w.ut.begin(), w.ut.end())};
  }

  Tape tape;
  const int u_node = tape.leaf(Tensor::vector({w.u.begin(), w.u.end()}));
  const int ut_node = tape.leaf(Tensor::vector({w.ut.begin(), w.ut.end()}));
  int ham = -1;
  if (source_ == HamiltonianSource::exact_pipeline) {
    ExactWaveFunctional fn(basis_);
    fn.bind(tape);
    ham = fn.evaluate(u_node, ut_node);
  } else {
    // reduced learned evaluation: branch network against the precombined trunk
    MlpNodes branch = mlp_on_tape(tape, model_->branch);
    const int w_node = tape.concat(u_node, ut_node);
    const int c = mlp_forward(tape, branch, w_node);
    ham = tape.dot(c, tape.leaf(Tensor::vector(psi_bar_)));
  }
  const int targets[] = {u_node, ut_node};
  std::vector<Tensor> adj = tape.backward(ham, targets);
  Tensor gu = std::move(adj[static_cast<std::size_t>(u_node)]);
  Tensor gut = std::move(adj[static_cast<std::size_t>(ut_node)]);
  if (gu.empty()) gu = Tensor::zeros({n});
  if (gut.empty()) gut = Tensor::zeros({n});
  return {gram_->solve(gu.view()), gram_->solve(gut.view())};
}

State HamiltonianSystem::vector_field(const State& w) const {
  auto [du, dut] = variational_gradient(w);
  for (double& v : du) v = -v;
  return State{std::move(dut), std::move(du)};
}

namespace {

State axpy_state(const State& w, double a, const State& d) {
  State out = w;
  for (std::size_t i = 0; i < out.u.size(); ++i) {
    out.u[i] += a * d.u[i];
    out.ut[i] += a * d.ut[i];
  }
  return out;
}

}  // namespace

Rollout integrate(const HamiltonianSystem& sys, const State& w0, double dt, int steps,
                  Integrator method) {
  check_state(w0, sys.basis().n(), "integrate");
  if (!(dt > 0.0)) fail_invalid("integrate: dt must be positive");
  if (steps < 1) fail_invalid("integrate: need at least one step");

  Rollout out;
  out.t.reserve(static_cast<std::size_t>(steps) + 1);
  out.w.reserve(static_cast<std::size_t>(steps) + 1);
  out.t.push_back(0.0);
  out.w.push_back(w0);

  State w = w0;
  for (int s = 1; s <= steps; ++s) {
    if (method == Integrator::rk4) {
      const State k1 = sys.vector_field(w);
      const State k2 = sys.vector_field(axpy_state(w, 0.5 * dt, k1));
      const State k3 = sys.vector_field(axpy_state(w, 0.5 * dt, k2));
      const State k4 = sys.vector_field(axpy_state(w, dt, k3));
      for (std::size_t i = 0; i < w.u.size(); ++i) {
        w.u[i] += dt / 6.0 * (k1.u[i] + 2.0 * k2.u[i] + 2.0 * k3.u[i] + k4.u[i]);
        w.ut[i] += dt / 6.0 * (k1.ut[i] + 2.0 * k2.ut[i] + 2.0 * k3.ut[i] + k4.ut[i]);
      }
    } else {
      // kick - drift - kick; splits exactly for the separable wave system
      auto kick = [&](const State& at, double step) {
        auto [du, dut] = sys.variational_gradient(at);
        (void)dut;
        for (std::size_t i = 0; i < w.ut.size(); ++i) w.ut[i] -= step * du[i];
      };
      kick(w, 0.5 * dt);
      auto [du_mid, dut_mid] = sys.variational_gradient(w);
      (void)du_mid;
      for (std::size_t i = 0; i < w.u.size(); ++i) w.u[i] += dt * dut_mid[i];
      kick(w, 0.5 * dt);
    }
    if (!finite_state(w))
      fail_numeric("integrate: non-finite state at step " + std::to_string(s));
    out.t.push_back(dt * s);
    out.w.push_back(w);
  }
  return out;
}

std::vector<double> hamiltonian_series(const HamiltonianSystem& sys, std::span<const State> snaps) {
  std::vector<double> series;
  series.reserve(snaps.size());
  for (const State& w : snaps) series.push_back(sys.value(w));
  return series;
}

RolloutReport evaluate_rollout(const Dataset& ds, int traj, const DeepONetModel* model, double dt,
                               int steps, Integrator method, GramMode mode) {
  if (traj < 0 || traj >= ds.n_traj()) fail_invalid("evaluate_rollout: trajectory index out of range");
  const NodalBasis basis(ds.nx(), ds.x_lo(), ds.x_hi());
  if (model) {
    if (model->nx != ds.nx())
      fail_mismatch("evaluate_rollout: checkpoint grid (nx=" + std::to_string(model->nx) +
                    ") does not match dataset grid (nx=" + std::to_string(ds.nx()) + ")");
  }
  const HamiltonianSystem sys = model ? HamiltonianSystem::learned(*model, basis, mode)
                                      : HamiltonianSystem::exact_pipeline(basis, mode);
  const HamiltonianSystem exact = HamiltonianSystem::exact_direct(basis);
  const InitialCondition& f = ds.trajectory(traj).f;

  State w0;
  {
    auto u0 = ds.u_at(traj, 0);
    auto ut0 = ds.ut_at(traj, 0);
    w0.u.assign(u0.begin(), u0.end());
    w0.ut.assign(ut0.begin(), ut0.end());
  }

  Rollout roll = integrate(sys, w0, dt, steps, method);

  RolloutReport rep;
  rep.t = roll.t;
  rep.learned = std::move(roll.w);
  rep.model_hash = model ? model->config_hash() : 0;
  rep.data_hash = ds.config_hash();

  const int n = ds.nx();
  const double h = ds.h();
  rep.truth.reserve(rep.t.size());
  for (double t : rep.t) {
    State truth;
    truth.u.resize(static_cast<std::size_t>(n));
    truth.ut.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const WavePoint p = dalembert(f, t, ds.x_lo() + h * i);
      truth.u[static_cast<std::size_t>(i)] = p.u;
      truth.ut[static_cast<std::size_t>(i)] = p.ut;
    }
    rep.truth.push_back(std::move(truth));
  }

  double err_sq = 0.0, ref_sq = 0.0;
  for (std::size_t j = 0; j < rep.t.size(); ++j) {
    double eu = 0.0, eut = 0.0, ru = 0.0, rut = 0.0;
    for (int i = 0; i < n; ++i) {
      const double du = rep.learned[j].u[static_cast<std::size_t>(i)] -
                        rep.truth[j].u[static_cast<std::size_t>(i)];
      const double dut = rep.learned[j].ut[static_cast<std::size_t>(i)] -
                         rep.truth[j].ut[static_cast<std::size_t>(i)];
      eu += du * du;
      eut += dut * dut;
      ru += rep.truth[j].u[static_cast<std::size_t>(i)] * rep.truth[j].u[static_cast<std::size_t>(i)];
      rut += rep.truth[j].ut[static_cast<std::size_t>(i)] *
             rep.truth[j].ut[static_cast<std::size_t>(i)];
    }
    rep.err_u.push_back(std::sqrt(h * eu));
    rep.err_ut.push_back(std::sqrt(h * eut));
    err_sq += h * (eu + eut);
    ref_sq += h * (ru + rut);
  }
  rep.rel_l2_error = ref_sq > 0.0 ? std::sqrt(err_sq / ref_sq) : std::sqrt(err_sq);

  rep.h_on_true = hamiltonian_series(sys, rep.truth);
  const double h0 = rep.h_on_true.empty() ? 0.0 : rep.h_on_true.front();
  for (double& v : rep.h_on_true) v -= h0;
  rep.h_exact_on_learned = hamiltonian_series(exact, rep.learned);
  return rep;
}

void write_rollout_csv(const RolloutReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_io("cannot open for writing: " + path);
  out << "# model_hash=" << report.model_hash << " data_hash=" << report.data_hash << "\n";
  out << "t,l2_error_u,l2_error_ut,H_learned_on_true,H_true_on_learned\n";
  out.precision(17);
  for (int j = 0; j < report.rows(); ++j) {
    out << report.t[static_cast<std::size_t>(j)] << ','
        << report.err_u[static_cast<std::size_t>(j)] << ','
        << report.err_ut[static_cast<std::size_t>(j)] << ','
        << report.h_on_true[static_cast<std::size_t>(j)] << ','
        << report.h_exact_on_learned[static_cast<std::size_t>(j)] << "\n";
  }
  if (!out) fail_io("write failed: " + path);
}

}  // namespace hamwave
