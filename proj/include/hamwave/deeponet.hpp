// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hamwave/basis.hpp"
#include "hamwave/tape.hpp"
#include "hamwave/tensor.hpp"

namespace hamwave {

/// Weights of a fully connected network: tanh on hidden layers, identity on
/// the output layer. `layers` counts weight matrices.
struct MlpParams {
  std::vector<Tensor> weights;  // each out x in
  std::vector<Tensor> biases;

  int n_layers() const { return static_cast<int>(weights.size()); }
  int input_dim() const;
  int output_dim() const;
  std::size_t n_parameters() const;
  void validate() const;
};

/// Plain (untaped) forward pass.
std::vector<double> mlp_eval(const MlpParams& mlp, std::span<const double> x);

/// Positive-weight quadrature on the spatial domain.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  double total() const;
};

/// Composite trapezoid aligned with the periodic grid: weight h at every node.
QuadratureRule trapezoid_rule(const NodalBasis& basis);

/// Branch/trunk pair producing the scalar density H(w)(y) as the inner
/// product of the two network outputs. The branch takes the 2N concatenated
/// nodal values of (u, u_t); the trunk takes the location y.
struct DeepONetModel {
  int nx = 0;
  int p = 0;
  int hidden = 0;
  int layers = 0;
  std::uint64_t seed = 0;
  double x_lo = 0.0, x_hi = 1.0;
  MlpParams branch;  // 2*nx -> p
  MlpParams trunk;   // 1 -> p

  std::size_t n_parameters() const { return branch.n_parameters() + trunk.n_parameters(); }
  std::uint64_t config_hash() const;
  void validate() const;
};

/// Fan-in scaled symmetric uniform initialization, reproducible from the seed.
DeepONetModel init_model(int nx, int p, int hidden, int layers, std::uint64_t seed,
                         double x_lo = 0.0, double x_hi = 1.0);

/// Parameter leaves of one network on a tape.
struct MlpNodes {
  std::vector<int> weights;
  std::vector<int> biases;
};

MlpNodes mlp_on_tape(Tape& tape, const MlpParams& mlp);
int mlp_forward(Tape& tape, const MlpNodes& nodes, int x);

/// One model bound to one tape: parameters are recorded as leaves once, then
/// densities and Hamiltonians can be evaluated repeatedly (sharing the
/// parameter nodes, so their gradients accumulate across evaluations).
class DeepONetOnTape {
public:
  DeepONetOnTape(Tape& tape, const DeepONetModel& model);

  int branch(int w) const;    ///< coefficient vector c(w), length p
  int trunk(double y) const;  ///< basis vector psi(y), length p; y must lie in the domain
  int density(int w, double y) const;

  /// Quadrature of the density: sum_m weight_m * density(w, y_m).
  int hamiltonian(int w, const QuadratureRule& rule) const;

  /// Precomputes psi_bar = sum_m weight_m * psi(y_m) on the tape; after that
  /// hamiltonian_cached(w) = dot(c(w), psi_bar) evaluates the same integral
  /// without re-recording the trunk per sample.
  void cache_quadrature(const QuadratureRule& rule);
  int hamiltonian_cached(int w) const;

  const MlpNodes& branch_params() const { return branch_nodes_; }
  const MlpNodes& trunk_params() const { return trunk_nodes_; }
  std::vector<int> all_params() const;
  const DeepONetModel& model() const { return *model_; }

private:
  Tape* tape_;
  const DeepONetModel* model_;
  MlpNodes branch_nodes_, trunk_nodes_;
  int psi_bar_ = -1;
};

/// Plain density / integrated Hamiltonian values (fresh internal tape).
double density_value(const DeepONetModel& model, std::span<const double> u,
                     std::span<const double> ut, double y);
double hamiltonian_value(const DeepONetModel& model, std::span<const double> u,
                         std::span<const double> ut, const QuadratureRule& rule);

/// Variational derivatives (dH/du, dH/du_t) of the integrated learned
/// Hamiltonian: reverse-mode gradient with respect to the two nodal-value
/// blocks, each mapped through the Gram solve.
std::pair<FieldVector, FieldVector> grad_hamiltonian(const DeepONetModel& model,
                                                     std::span<const double> u,
                                                     std::span<const double> ut,
                                                     const QuadratureRule& rule,
                                                     const GramMatrix& gram);

/// Checkpoint container; write/read round-trips are bit-exact.
void save_model(const DeepONetModel& model, const std::string& path);
DeepONetModel load_model(const std::string& path);

}  // namespace hamwave
