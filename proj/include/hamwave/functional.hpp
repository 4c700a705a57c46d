// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "hamwave/basis.hpp"
#include "hamwave/deeponet.hpp"
#include "hamwave/error.hpp"
#include "hamwave/tape.hpp"

namespace hamwave {

/// Scalar functional of the state (u, u_t) recorded on a tape, so both its
/// value and its AD gradient (hence variational derivative) are available.
class StateFunctional {
public:
  virtual ~StateFunctional() = default;

  /// Records parameters/constants on the tape; call once per tape.
  virtual void bind(Tape& tape) = 0;

  /// Records the scalar for one state; u and ut are vector nodes of length nx.
  virtual int evaluate(int u, int ut) const = 0;
};

/// Central difference (v_{i+1} - v_{i-1}) / (2h) on the periodic grid,
/// expressed with slice/concat so it stays differentiable.
int central_difference_node(Tape& tape, int v, int n, double h);

/// The exact wave Hamiltonian int (u_x^2 + u_t^2)/2 dx discretized with the
/// periodic trapezoid rule and a central-difference u_x, recorded through the
/// tape ops so the AD + Gram pipeline applies to it like to a learned model.
class ExactWaveFunctional : public StateFunctional {
public:
  explicit ExactWaveFunctional(const NodalBasis& basis) : n_(basis.n()), h_(basis.h()) {}

  void bind(Tape& tape) override { tape_ = &tape; }
  int evaluate(int u, int ut) const override;

private:
  int n_;
  double h_;
  Tape* tape_ = nullptr;
};

/// Integrated DeepONet density as a state functional. Binding records the
/// network parameters and precombines the trunk over the quadrature rule.
class DeepONetFunctional : public StateFunctional {
public:
  DeepONetFunctional(const DeepONetModel& model, const QuadratureRule& rule)
      : model_(&model), rule_(&rule) {}

  void bind(Tape& tape) override {
    net_.emplace(tape, *model_);
    net_->cache_quadrature(*rule_);
    tape_ = &tape;
  }

  int evaluate(int u, int ut) const override {
    if (!net_) fail_invalid("functional: bind was not called");
    return net_->hamiltonian_cached(tape_->concat(u, ut));
  }

  DeepONetOnTape& net() {
    if (!net_) fail_invalid("functional: bind was not called");
    return *net_;
  }

private:
  const DeepONetModel* model_;
  const QuadratureRule* rule_;
  std::optional<DeepONetOnTape> net_;
  Tape* tape_ = nullptr;
};

}  // namespace hamwave
