// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <span>
#include <vector>

#include "hamwave/tape.hpp"

namespace hamwave {

/// Nodal values of a function in the hat-function space, one entry per grid
/// node.
using FieldVector = std::vector<double>;

/// Uniform periodic grid on [x_lo, x_hi) with piecewise-linear hat functions
/// phi_i. Point evaluation at the nodes is the dual basis: phi_i(x_j) is
/// delta_ij, so nodal coefficient vectors are also point-value vectors.
class NodalBasis {
public:
  NodalBasis(int n_points, double x_lo, double x_hi, bool periodic = true);

  int n() const { return n_; }
  double x_lo() const { return x_lo_; }
  double x_hi() const { return x_hi_; }
  double h() const { return h_; }
  double length() const { return x_hi_ - x_lo_; }
  bool periodic() const { return periodic_; }

  double node(int i) const { return x_lo_ + h_ * i; }
  std::vector<double> nodes() const;

  /// Value of hat function phi_i at x (periodic wrap).
  double eval_phi(int i, double x) const;

  /// Value of sum_i v_i phi_i at x.
  double eval_field(std::span<const double> v, double x) const;

private:
  int n_;
  double x_lo_, x_hi_, h_;
  bool periodic_;
};

enum class GramMode {
  exact,   ///< analytic hat-function integrals (cyclic tridiagonal)
  lumped,  ///< row-sum lumping, h * identity; kept for ablation runs
};

/// Gram (mass) matrix G_ij = int phi_i phi_j dx of the hat basis, stored with
/// its factorization. Immutable after construction; solves are reentrant.
class GramMatrix : public SpdOperator {
public:
  explicit GramMatrix(const NodalBasis& basis, GramMode mode = GramMode::exact);

  int dim() const override { return n_; }
  double h() const { return h_; }
  GramMode mode() const { return mode_; }

  double entry(int i, int j) const;

  /// y = G x.
  void multiply(std::span<const double> x, std::span<double> y) const;
  FieldVector multiply(std::span<const double> x) const;

  /// Solves G y = rhs.
  void solve(std::span<const double> rhs, std::span<double> out) const override;
  FieldVector solve(std::span<const double> rhs) const;

private:
  int n_;
  double h_;
  GramMode mode_;
  double diag_, off_;
  // Thomas factorization of the corner-free tridiagonal part plus the
  // Sherman-Morrison correction vector for the periodic corners
  std::vector<double> fac_diag_;  // pivots
  std::vector<double> fac_low_;   // multipliers
  std::vector<double> sm_z_;
  double sm_denom_ = 1.0;
  double sm_gamma_ = 0.0;

  void factorize();
  void tridiag_solve(std::span<const double> rhs, std::span<double> out) const;
};

/// Theorem-of-the-build: maps the Euclidean gradient that reverse-mode AD
/// yields with respect to nodal values into the variational derivative. The
/// returned coefficients g solve G g = grad_ad, and since the basis is nodal,
/// g_i is the value of the variational derivative at node i.
FieldVector variational_derivative(std::span<const double> grad_ad, const GramMatrix& gram);

/// L2 inner product of two fields given by nodal values: a^T G b.
double l2_inner(std::span<const double> a, std::span<const double> b, const GramMatrix& gram);

/// L2 norm sqrt(v^T G v).
double l2_norm(std::span<const double> v, const GramMatrix& gram);

}  // namespace hamwave
