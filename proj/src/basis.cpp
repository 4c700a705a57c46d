// SPDX-License-Identifier: Apache-2.0
#include "hamwave/basis.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "hamwave/error.hpp"

namespace hamwave {

NodalBasis::NodalBasis(int n_points, double x_lo, double x_hi, bool periodic)
    : n_(n_points), x_lo_(x_lo), x_hi_(x_hi), periodic_(periodic) {
  if (n_points < 3) fail_invalid("basis: need at least 3 nodes, got " + std::to_string(n_points));
  if (!(x_hi > x_lo)) fail_invalid("basis: empty domain");
  if (!periodic) fail_invalid("basis: only the periodic grid is supported");
  h_ = (x_hi - x_lo) / n_points;
}

std::vector<double> NodalBasis::nodes() const {
  std::vector<double> xs(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) xs[static_cast<std::size_t>(i)] = node(i);
  return xs;
}

double NodalBasis::eval_phi(int i, double x) const {
  if (i < 0 || i >= n_) fail_invalid("basis: phi index out of range");
  const double len = length();
  // periodic distance from x to node i, wrapped into [-len/2, len/2)
  double d = std::fmod(x - node(i), len);
  if (d < -0.5 * len) d += len;
  if (d >= 0.5 * len) d -= len;
  const double a = std::abs(d);
  return a >= h_ ? 0.0 : 1.0 - a / h_;
}

double NodalBasis::eval_field(std::span<const double> v, double x) const {
  if (static_cast<int>(v.size()) != n_) fail_invalid("basis: field length does not match grid");
  const double len = length();
  double rel = std::fmod((x - x_lo_) / h_, static_cast<double>(n_));
  if (rel < 0) rel += n_;
  (void)len;
  const int i = static_cast<int>(rel) % n_;
  const double frac = rel - std::floor(rel);
  const int j = (i + 1) % n_;
  return v[static_cast<std::size_t>(i)] * (1.0 - frac) + v[static_cast<std::size_t>(j)] * frac;
}

GramMatrix::GramMatrix(const NodalBasis& basis, GramMode mode)
    : n_(basis.n()), h_(basis.h()), mode_(mode) {
  if (mode_ == GramMode::exact) {
    diag_ = 2.0 * h_ / 3.0;
    off_ = h_ / 6.0;
    factorize();
  } else {
    diag_ = h_;  // row-sum lumping of the exact matrix
    off_ = 0.0;
  }
}

double GramMatrix::entry(int i, int j) const {
  if (i < 0 || i >= n_ || j < 0 || j >= n_) fail_invalid("gram: index out of range");
  if (i == j) return diag_;
  const int d = std::abs(i - j);
  if (d == 1 || d == n_ - 1) return off_;
  return 0.0;
}

void GramMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<int>(x.size()) != n_ || static_cast<int>(y.size()) != n_)
    fail_invalid("gram: multiply size mismatch");
  for (int i = 0; i < n_; ++i) {
    const int l = (i + n_ - 1) % n_;
    const int r = (i + 1) % n_;
    y[static_cast<std::size_t>(i)] = diag_ * x[static_cast<std::size_t>(i)] +
                                     off_ * (x[static_cast<std::size_t>(l)] + x[static_cast<std::size_t>(r)]);
  }
}

FieldVector GramMatrix::multiply(std::span<const double> x) const {
  FieldVector y(x.size());
  multiply(x, {y.data(), y.size()});
  return y;
}

void GramMatrix::factorize() {
  // Sherman-Morrison splitting of the cyclic matrix: A = A' + gamma u v^T with
  // u = e_0 + (off/gamma) e_{n-1}, v = e_0 + (off/gamma) e_{n-1} scaled so the
  // two corner entries are reproduced; A' is plain tridiagonal.
  sm_gamma_ = -diag_;
  const double corner = off_;
  std::vector<double> d(static_cast<std::size_t>(n_), diag_);
  d[0] = diag_ - sm_gamma_;
  d[static_cast<std::size_t>(n_ - 1)] = diag_ - corner * corner / sm_gamma_;

  fac_diag_.assign(static_cast<std::size_t>(n_), 0.0);
  fac_low_.assign(static_cast<std::size_t>(n_), 0.0);
  fac_diag_[0] = d[0];
  for (int i = 1; i < n_; ++i) {
    if (fac_diag_[static_cast<std::size_t>(i - 1)] == 0.0)
      fail_numeric("gram: factorization failed (zero pivot)");
    fac_low_[static_cast<std::size_t>(i)] = off_ / fac_diag_[static_cast<std::size_t>(i - 1)];
    fac_diag_[static_cast<std::size_t>(i)] =
        d[static_cast<std::size_t>(i)] - fac_low_[static_cast<std::size_t>(i)] * off_;
  }
  if (fac_diag_[static_cast<std::size_t>(n_ - 1)] == 0.0)
    fail_numeric("gram: factorization failed (zero pivot)");

  // z = A'^{-1} u
  std::vector<double> u(static_cast<std::size_t>(n_), 0.0);
  u[0] = sm_gamma_;
  u[static_cast<std::size_t>(n_ - 1)] = corner;
  sm_z_.assign(static_cast<std::size_t>(n_), 0.0);
  tridiag_solve({u.data(), u.size()}, {sm_z_.data(), sm_z_.size()});
  // v^T z with v = e_0 + (corner/gamma) e_{n-1}
  sm_denom_ = 1.0 + sm_z_[0] + (corner / sm_gamma_) * sm_z_[static_cast<std::size_t>(n_ - 1)];
  if (sm_denom_ == 0.0 || !std::isfinite(sm_denom_))
    fail_numeric("gram: factorization failed (singular correction)");
}

void GramMatrix::tridiag_solve(std::span<const double> rhs, std::span<double> out) const {
  // forward elimination / back substitution with the precomputed pivots
  out[0] = rhs[0];
  for (int i = 1; i < n_; ++i)
    out[static_cast<std::size_t>(i)] =
        rhs[static_cast<std::size_t>(i)] -
        fac_low_[static_cast<std::size_t>(i)] * out[static_cast<std::size_t>(i - 1)];
  out[static_cast<std::size_t>(n_ - 1)] /= fac_diag_[static_cast<std::size_t>(n_ - 1)];
  for (int i = n_ - 2; i >= 0; --i)
    out[static_cast<std::size_t>(i)] =
        (out[static_cast<std::size_t>(i)] - off_ * out[static_cast<std::size_t>(i + 1)]) /
        fac_diag_[static_cast<std::size_t>(i)];
}

void GramMatrix::solve(std::span<const double> rhs, std::span<double> out) const {
  if (static_cast<int>(rhs.size()) != n_ || static_cast<int>(out.size()) != n_)
    fail_invalid("gram: solve size mismatch");
  if (mode_ == GramMode::lumped) {
    for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(i)] / diag_;
    return;
  }
  tridiag_solve(rhs, out);
  const double vy = out[0] + (off_ / sm_gamma_) * out[static_cast<std::size_t>(n_ - 1)];
  const double scale = vy / sm_denom_;
  for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] -= scale * sm_z_[static_cast<std::size_t>(i)];
}

FieldVector GramMatrix::solve(std::span<const double> rhs) const {
  FieldVector out(rhs.size());
  solve(rhs, {out.data(), out.size()});
  return out;
}

FieldVector variational_derivative(std::span<const double> grad_ad, const GramMatrix& gram) {
  if (static_cast<int>(grad_ad.size()) != gram.dim())
    fail_invalid("variational_derivative: gradient length " + std::to_string(grad_ad.size()) +
                 " does not match grid size " + std::to_string(gram.dim()));
  return gram.solve(grad_ad);
}

double l2_inner(std::span<const double> a, std::span<const double> b, const GramMatrix& gram) {
  if (a.size() != b.size() || static_cast<int>(a.size()) != gram.dim())
    fail_invalid("l2_inner: length mismatch");
  FieldVector gb = gram.multiply(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * gb[i];
  return s;
}

double l2_norm(std::span<const double> v, const GramMatrix& gram) {
  return std::sqrt(l2_inner(v, v, gram));
}

}  // namespace hamwave
