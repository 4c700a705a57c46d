// SPDX-License-Identifier: Apache-2.0
#include "hamwave/training.hpp"

#include <chrono>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>

#include "hamwave/error.hpp"
#include "hamwave/hash.hpp"
#include "hamwave/rng.hpp"

namespace hamwave {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) fail_invalid("train: learning rate must be >= 0");
  if (epochs < 1) fail_invalid("train: epochs must be >= 1");
  if (batch_size < 1) fail_invalid("train: batch size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    fail_invalid("train: Adam moments must lie in [0, 1)");
  if (!(epsilon > 0.0)) fail_invalid("train: epsilon must be positive");
  if (checkpoint_every < 0) fail_invalid("train: checkpoint_every must be >= 0");
}

std::pair<FieldVector, FieldVector> time_derivatives(const Dataset& ds, int traj, int j) {
  const int nt = ds.nt();
  if (nt < 2) fail_invalid("time_derivatives: trajectory too short (need at least 3 time points)");
  if (j < 0 || j > nt) fail_invalid("time_derivatives: time index out of range");
  const int nx = ds.nx();
  const double dt = ds.dt();
  FieldVector du(static_cast<std::size_t>(nx));
  FieldVector dut(static_cast<std::size_t>(nx));
  auto fill = [&](auto row, FieldVector& out) {
    if (j == 0) {
      auto r0 = row(0), r1 = row(1), r2 = row(2);
      for (int i = 0; i < nx; ++i)
        out[static_cast<std::size_t>(i)] = (-3.0 * r0[i] + 4.0 * r1[i] - r2[i]) / (2.0 * dt);
    } else if (j == nt) {
      auto r0 = row(nt), r1 = row(nt - 1), r2 = row(nt - 2);
      for (int i = 0; i < nx; ++i)
        out[static_cast<std::size_t>(i)] = (3.0 * r0[i] - 4.0 * r1[i] + r2[i]) / (2.0 * dt);
    } else {
      auto prev = row(j - 1), next = row(j + 1);
      for (int i = 0; i < nx; ++i)
        out[static_cast<std::size_t>(i)] = (next[i] - prev[i]) / (2.0 * dt);
    }
  };
  fill([&](int jj) { return ds.u_at(traj, jj); }, du);
  fill([&](int jj) { return ds.ut_at(traj, jj); }, dut);
  return {std::move(du), std::move(dut)};
}

int dynamics_loss_node(Tape& tape, const StateFunctional& hamiltonian,
                       std::shared_ptr<const GramMatrix> gram,
                       std::span<const DynamicsSample> batch) {
  if (batch.empty()) fail_invalid("dynamics_loss: empty batch");
  const double h = gram->h();
  int total = -1;
  for (const DynamicsSample& s : batch) {
    const int u = tape.leaf(Tensor::vector({s.u.begin(), s.u.end()}));
    const int ut = tape.leaf(Tensor::vector({s.ut.begin(), s.ut.end()}));
    const int ham = hamiltonian.evaluate(u, ut);
    const int targets[] = {u, ut};
    const std::vector<int> grads = tape.backward_on_tape(ham, targets);
    const int var_u = tape.spd_solve(gram, grads[0]);
    const int var_ut = tape.spd_solve(gram, grads[1]);
    const int du = tape.leaf(Tensor::vector({s.du.begin(), s.du.end()}));
    const int dut = tape.leaf(Tensor::vector({s.dut.begin(), s.dut.end()}));
    const int r1 = tape.sub(du, var_ut);
    const int r2 = tape.add(dut, var_u);
    const int sq = tape.add(tape.dot(r1, r1), tape.dot(r2, r2));
    total = total < 0 ? sq : tape.add(total, sq);
  }
  return tape.scalar_mul(total, h / static_cast<double>(batch.size()));
}

int density_loss_node(Tape& tape, DeepONetOnTape& net, std::span<const DynamicsSample> batch,
                      std::span<const double> ys, std::span<const double> targets) {
  if (batch.empty() || ys.empty()) fail_invalid("density_loss: empty batch or collocation set");
  if (targets.size() != batch.size() * ys.size())
    fail_invalid("density_loss: target table does not match batch x nodes");
  // trunk evaluations are shared across the batch
  std::vector<int> psi;
  psi.reserve(ys.size());
  for (double y : ys) psi.push_back(net.trunk(y));
  int total = -1;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const int u = tape.leaf(Tensor::vector({batch[s].u.begin(), batch[s].u.end()}));
    const int ut = tape.leaf(Tensor::vector({batch[s].ut.begin(), batch[s].ut.end()}));
    const int c = net.branch(tape.concat(u, ut));
    for (std::size_t m = 0; m < ys.size(); ++m) {
      const int d = tape.dot(c, psi[m]);
      const int tgt = tape.leaf(Tensor::scalar(targets[s * ys.size() + m]));
      const int diff = tape.sub(d, tgt);
      const int sq = tape.mul(diff, diff);
      total = total < 0 ? sq : tape.add(total, sq);
    }
  }
  return tape.scalar_mul(total, 1.0 / static_cast<double>(batch.size() * ys.size()));
}

namespace {

/// Parameter tensors of the model in the same order DeepONetOnTape reports
/// its parameter nodes.
std::vector<Tensor*> parameter_list(DeepONetModel& model) {
  std::vector<Tensor*> out;
  for (MlpParams* mlp : {&model.branch, &model.trunk}) {
    for (Tensor& w : mlp->weights) out.push_back(&w);
    for (Tensor& b : mlp->biases) out.push_back(&b);
  }
  return out;
}

class Adam {
public:
  Adam(const TrainConfig& cfg, const std::vector<Tensor*>& params) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Tensor* p : params) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }

  void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t p = 0; p < params.size(); ++p) {
      Tensor& theta = *params[p];
      const Tensor& g = grads[p];
      std::vector<double>& m = m_[p];
      std::vector<double>& v = v_[p];
      for (std::size_t i = 0; i < theta.size(); ++i) {
        const double gi = g.empty() ? 0.0 : g[i];
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        theta[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      }
    }
  }

private:
  TrainConfig cfg_;
  int t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct SampleIndex {
  int traj, j;
};

double param_norm(const MlpParams& mlp) {
  double s = 0.0;
  for (const Tensor& w : mlp.weights)
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * w[i];
  for (const Tensor& b : mlp.biases)
    for (std::size_t i = 0; i < b.size(); ++i) s += b[i] * b[i];
  return std::sqrt(s);
}

}  // namespace

TrainReport train(DeepONetModel& model, const Dataset& ds, const TrainConfig& cfg,
                  const std::string& log_csv_path, const std::string& checkpoint_path,
                  const TrainCallback& callback) {
  cfg.validate();
  model.validate();
  if (ds.n_traj() < 1) fail_invalid("train: empty dataset");
  if (model.nx != ds.nx())
    fail_mismatch("train: model grid (nx=" + std::to_string(model.nx) +
                  ") does not match dataset grid (nx=" + std::to_string(ds.nx()) + ")");

  const NodalBasis basis(ds.nx(), ds.x_lo(), ds.x_hi());
  auto gram = std::make_shared<const GramMatrix>(basis, cfg.gram_mode);
  const QuadratureRule rule = trapezoid_rule(basis);
  DeepONetFunctional functional(model, rule);

  Rng rng(cfg.seed);
  auto draw = [&](std::size_t count) {
    std::vector<SampleIndex> idx(count);
    for (SampleIndex& s : idx) {
      s.traj = static_cast<int>(rng.index(static_cast<std::uint64_t>(ds.n_traj())));
      s.j = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(ds.nt() - 1)));
    }
    return idx;
  };
  auto materialize = [&](const std::vector<SampleIndex>& idx) {
    std::vector<DynamicsSample> batch(idx.size());
    for (std::size_t s = 0; s < idx.size(); ++s) {
      batch[s].u = ds.u_at(idx[s].traj, idx[s].j);
      batch[s].ut = ds.ut_at(idx[s].traj, idx[s].j);
      auto [du, dut] = time_derivatives(ds, idx[s].traj, idx[s].j);
      batch[s].du = std::move(du);
      batch[s].dut = std::move(dut);
    }
    return batch;
  };
  // ground-truth densities for the supervised mode, from the analytic solution
  auto density_targets = [&](const std::vector<SampleIndex>& idx) {
    std::vector<double> targets(idx.size() * rule.nodes.size());
    for (std::size_t s = 0; s < idx.size(); ++s) {
      const InitialCondition& f = ds.trajectory(idx[s].traj).f;
      const double t = ds.time(idx[s].j);
      for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
        const double ux = dalembert_ux(f, t, rule.nodes[m]);
        const double ut = dalembert(f, t, rule.nodes[m]).ut;
        targets[s * rule.nodes.size() + m] = 0.5 * (ux * ux + ut * ut);
      }
    }
    return targets;
  };

  const std::vector<SampleIndex> monitor_idx = draw(static_cast<std::size_t>(cfg.batch_size));
  const std::vector<DynamicsSample> monitor = materialize(monitor_idx);
  const std::vector<double> monitor_targets =
      cfg.loss_mode == LossMode::density ? density_targets(monitor_idx) : std::vector<double>{};

  auto loss_for = [&](const std::vector<DynamicsSample>& batch, const std::vector<double>& targets,
                      Tape& tape) {
    if (cfg.loss_mode == LossMode::dynamics)
      return dynamics_loss_node(tape, functional, gram, batch);
    return density_loss_node(tape, functional.net(), batch,
                             {rule.nodes.data(), rule.nodes.size()},
                             {targets.data(), targets.size()});
  };

  std::vector<Tensor*> params = parameter_list(model);
  Adam adam(cfg, params);

  std::ofstream log;
  if (!log_csv_path.empty()) {
    log.open(log_csv_path);
    if (!log) fail_io("train: cannot open log file " + log_csv_path);
    log << "epoch,loss,wall_ms\n";
    log.precision(17);
  }

  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
        .count();
  };
  auto check_finite_loss = [&](double value, int epoch, const char* what) {
    if (!std::isfinite(value))
      fail_numeric("train: non-finite " + std::string(what) + " at epoch " + std::to_string(epoch) +
                   " (|branch|=" + format_double(param_norm(model.branch)) +
                   ", |trunk|=" + format_double(param_norm(model.trunk)) + ")");
  };

  TrainReport report;
  report.losses.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    functional.bind(tape);
    const double monitor_loss =
        tape.value(loss_for(monitor, monitor_targets, tape)).scalar_value();
    check_finite_loss(monitor_loss, epoch, "monitor loss");
    report.losses.push_back(monitor_loss);
    if (log) log << epoch << ',' << monitor_loss << ',' << elapsed_ms() << "\n";
    if (callback) callback(epoch, monitor_loss);

    const std::vector<SampleIndex> batch_idx = draw(static_cast<std::size_t>(cfg.batch_size));
    const std::vector<DynamicsSample> batch = materialize(batch_idx);
    const std::vector<double> batch_targets =
        cfg.loss_mode == LossMode::density ? density_targets(batch_idx) : std::vector<double>{};
    const int loss = loss_for(batch, batch_targets, tape);
    check_finite_loss(tape.value(loss).scalar_value(), epoch, "batch loss");

    const std::vector<int> param_nodes = functional.net().all_params();
    const std::vector<Tensor> grads = tape.backward(loss, param_nodes);
    std::vector<Tensor> aligned;
    aligned.reserve(param_nodes.size());
    for (int id : param_nodes) aligned.push_back(grads[static_cast<std::size_t>(id)]);
    adam.step(params, aligned);

    if (cfg.checkpoint_every > 0 && !checkpoint_path.empty() &&
        (epoch + 1) % cfg.checkpoint_every == 0)
      save_model(model, checkpoint_path);
  }

  {
    Tape tape;
    functional.bind(tape);
    report.final_loss = tape.value(loss_for(monitor, monitor_targets, tape)).scalar_value();
    check_finite_loss(report.final_loss, cfg.epochs, "final loss");
    if (log) log << cfg.epochs << ',' << report.final_loss << ',' << elapsed_ms() << "\n";
    if (callback) callback(cfg.epochs, report.final_loss);
  }
  report.wall_ms = elapsed_ms();
  if (!checkpoint_path.empty()) save_model(model, checkpoint_path);
  if (log) {
    log.close();
    if (!log) fail_io("train: write failed on log file " + log_csv_path);
  }
  return report;
}

}  // namespace hamwave
