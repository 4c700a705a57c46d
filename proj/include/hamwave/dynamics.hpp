// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hamwave/basis.hpp"
#include "hamwave/deeponet.hpp"
#include "hamwave/wave_data.hpp"

namespace hamwave {

struct State {
  FieldVector u, ut;
};

enum class Integrator { rk4, leapfrog };

enum class HamiltonianSource {
  learned,         ///< DeepONet density through the AD + Gram pipeline
  exact_pipeline,  ///< exact wave Hamiltonian through the same pipeline
  exact_direct,    ///< exact wave Hamiltonian with closed-form derivatives
};

/// A Hamiltonian together with the machinery to evaluate it and its
/// variational derivatives on nodal states. The induced vector field applies
/// the skew structure J = [[0, Id], [-Id, 0]]:
///   du/dt = dH/du_t,  du_t/dt = -dH/du.
class HamiltonianSystem {
public:
  static HamiltonianSystem learned(const DeepONetModel& model, const NodalBasis& basis,
                                   GramMode mode = GramMode::exact);
  static HamiltonianSystem exact_pipeline(const NodalBasis& basis,
                                          GramMode mode = GramMode::exact);
  static HamiltonianSystem exact_direct(const NodalBasis& basis);

  HamiltonianSource source() const { return source_; }
  const NodalBasis& basis() const { return basis_; }
  const GramMatrix& gram() const { return *gram_; }

  double value(const State& w) const;
  /// (dH/du, dH/du_t).
  std::pair<FieldVector, FieldVector> variational_gradient(const State& w) const;
  State vector_field(const State& w) const;

private:
  HamiltonianSystem(HamiltonianSource source, const NodalBasis& basis, GramMode mode);

  HamiltonianSource source_;
  NodalBasis basis_;
  std::shared_ptr<const GramMatrix> gram_;
  std::shared_ptr<const DeepONetModel> model_;
  std::vector<double> psi_bar_;  // quadrature-combined trunk outputs
};

struct Rollout {
  std::vector<double> t;
  std::vector<State> w;
};

/// Fixed-step integration; aborts with a numeric error (naming the step) if
/// the state stops being finite.
Rollout integrate(const HamiltonianSystem& sys, const State& w0, double dt, int steps,
                  Integrator method);

/// The system's Hamiltonian evaluated on each snapshot. Cross-evaluation
/// (learned H on true states, exact H on learned states) is done by passing
/// snapshots from one source into the system of another.
std::vector<double> hamiltonian_series(const HamiltonianSystem& sys, std::span<const State> snaps);

/// Rollout of a learned (or exact) system against the analytic reference
/// trajectory, with the two Figure-style Hamiltonian series.
struct RolloutReport {
  std::vector<double> t;
  std::vector<State> learned;  ///< integrated states
  std::vector<State> truth;    ///< analytic states at the same times
  std::vector<double> err_u;   ///< h-scaled l2 norm of u error per snapshot
  std::vector<double> err_ut;
  /// system Hamiltonian on the true states, reported relative to t=0 (the
  /// learned Hamiltonian is only identified up to an additive constant)
  std::vector<double> h_on_true;
  /// exact Hamiltonian evaluated on the integrated states (absolute)
  std::vector<double> h_exact_on_learned;
  double rel_l2_error = 0.0;  ///< aggregate state error over the whole window
  std::uint64_t model_hash = 0;
  std::uint64_t data_hash = 0;

  int rows() const { return static_cast<int>(t.size()); }
};

RolloutReport evaluate_rollout(const Dataset& ds, int traj, const DeepONetModel* model,
                               double dt, int steps, Integrator method,
                               GramMode mode = GramMode::exact);

/// CSV columns: t, l2_error_u, l2_error_ut, H_learned_on_true, H_true_on_learned.
void write_rollout_csv(const RolloutReport& report, const std::string& path);

}  // namespace hamwave
