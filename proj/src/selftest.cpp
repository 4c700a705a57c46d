// SPDX-License-Identifier: Apache-2.0
#include "hamwave/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "hamwave/basis.hpp"
#include "hamwave/deeponet.hpp"
#include "hamwave/error.hpp"
#include "hamwave/rng.hpp"
#include "hamwave/tape.hpp"
#include "hamwave/tensor.hpp"

namespace hamwave {

namespace {

// ---- random composite graphs, replayable for finite differencing ----------

struct LeafSpec {
  std::vector<int> shape;
  std::vector<double> values;
};

struct GraphResult {
  double loss = 0.0;
  std::vector<Tensor> leaf_grads;  // aligned with leaves, filled by eval(grad=true)
};

// Builds the graph scripted by `seed` over the given leaf values. The script
// never branches on values, so replaying with perturbed leaves keeps the
// structure identical.
GraphResult eval_random_graph(std::uint64_t seed, const std::vector<LeafSpec>& leaves,
                              bool want_grads) {
  Rng rng(seed);
  Tape tape;
  std::vector<int> leaf_ids;
  std::vector<int> vec_pool, vec_len;
  std::vector<int> scalar_pool;
  for (const LeafSpec& l : leaves) {
    const int id = l.shape.size() == 2
                       ? tape.leaf(Tensor::matrix(l.shape[0], l.shape[1], l.values))
                       : tape.leaf(Tensor::vector(l.values));
    leaf_ids.push_back(id);
    if (l.shape.size() == 1) {
      vec_pool.push_back(id);
      vec_len.push_back(l.shape[0]);
    }
  }
  const int n_ops = 5 + static_cast<int>(rng.index(5));
  for (int k = 0; k < n_ops; ++k) {
    const int pick = static_cast<int>(rng.index(8));
    const std::size_t ia = rng.index(vec_pool.size());
    const std::size_t ib = rng.index(vec_pool.size());
    const int a = vec_pool[ia], b = vec_pool[ib];
    const int la = vec_len[ia], lb = vec_len[ib];
    switch (pick) {
      case 0:
        if (la == lb) {
          vec_pool.push_back(tape.add(a, b));
          vec_len.push_back(la);
        }
        break;
      case 1:
        if (la == lb) {
          vec_pool.push_back(tape.mul(a, b));
          vec_len.push_back(la);
        }
        break;
      case 2:
        vec_pool.push_back(tape.scalar_mul(a, rng.uniform(-2.0, 2.0)));
        vec_len.push_back(la);
        break;
      case 3:
        vec_pool.push_back(tape.tanh(a));
        vec_len.push_back(la);
        break;
      case 4:
        vec_pool.push_back(tape.concat(a, b));
        vec_len.push_back(la + lb);
        break;
      case 5:
        if (la >= 2) {
          const int start = static_cast<int>(rng.index(static_cast<std::uint64_t>(la)));
          const int len = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(la - start)));
          vec_pool.push_back(tape.slice(a, start, len));
          vec_len.push_back(len);
        }
        break;
      case 6:
        if (la == lb)
          scalar_pool.push_back(tape.dot(a, b));
        else
          scalar_pool.push_back(tape.sum(a));
        break;
      case 7:
        if (la >= 3) {
          auto gram = std::make_shared<const GramMatrix>(NodalBasis(la, 0.0, 1.0));
          vec_pool.push_back(tape.spd_solve(gram, a));
          vec_len.push_back(la);
        }
        break;
    }
  }
  // fold everything into one scalar so every node influences the loss
  int loss = -1;
  for (int v : vec_pool) {
    const int s = tape.sum(v);
    loss = loss < 0 ? s : tape.add(loss, s);
  }
  for (int s : scalar_pool) loss = loss < 0 ? s : tape.add(loss, s);
  // a tanh keeps deep products bounded without flattening the gradients
  loss = tape.tanh(tape.scalar_mul(loss, 0.25));

  GraphResult out;
  out.loss = tape.value(loss).scalar_value();
  if (want_grads) {
    std::vector<Tensor> adj = tape.backward(loss);
    for (int id : leaf_ids) {
      Tensor g = std::move(adj[static_cast<std::size_t>(id)]);
      if (g.empty()) g = Tensor::zeros(tape.value(id).shape());
      out.leaf_grads.push_back(std::move(g));
    }
  }
  return out;
}

std::vector<LeafSpec> random_leaves(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LeafSpec> leaves;
  const int n = 2 + static_cast<int>(rng.index(3));
  for (int i = 0; i < n; ++i) {
    LeafSpec l;
    const int len = 3 + static_cast<int>(rng.index(3));
    l.shape = {len};
    for (int j = 0; j < len; ++j) l.values.push_back(rng.uniform(-2.0, 2.0));
    leaves.push_back(std::move(l));
  }
  return leaves;
}

/// Largest relative mismatch between reverse-mode and central-difference
/// gradients over every leaf entry of one scripted graph.
double gradient_check(std::uint64_t seed, double step) {
  const std::vector<LeafSpec> leaves = random_leaves(seed ^ 0x9e3779b97f4a7c15ull);
  const GraphResult base = eval_random_graph(seed, leaves, true);
  double worst = 0.0;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    for (std::size_t e = 0; e < leaves[l].values.size(); ++e) {
      std::vector<LeafSpec> plus = leaves, minus = leaves;
      plus[l].values[e] += step;
      minus[l].values[e] -= step;
      const double fd = (eval_random_graph(seed, plus, false).loss -
                         eval_random_graph(seed, minus, false).loss) /
                        (2.0 * step);
      const double ad = base.leaf_grads[l][e];
      const double denom = std::max({1.0, std::abs(ad), std::abs(fd)});
      worst = std::max(worst, std::abs(ad - fd) / denom);
    }
  }
  return worst;
}

// ---- quadrature oracle for the Gram entries --------------------------------

/// Integral of phi_i * phi_j by composite Simpson with subintervals aligned to
/// the grid cells, where the integrand is piecewise quadratic (so the rule is
/// exact up to rounding).
double quad_phi_product(const NodalBasis& basis, int i, int j, int min_points) {
  const int cells = basis.n();
  int m = (min_points + cells - 1) / cells;
  if (m % 2) ++m;
  if (m < 2) m = 2;
  const double h = basis.h() / m;
  double total = 0.0;
  for (int c = 0; c < cells; ++c) {
    const double x0 = basis.x_lo() + c * basis.h();
    double s = 0.0;
    for (int k = 0; k <= m; ++k) {
      const double x = x0 + h * k;
      const double w = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      s += w * basis.eval_phi(i, x) * basis.eval_phi(j, x);
    }
    total += s * h / 3.0;
  }
  return total;
}

struct Check {
  const char* name;
  bool ok;
  double measured;
  double bound;
};

}  // namespace

int selftest(bool verbose) {
  std::vector<Check> checks;

  {  // reverse-mode gradients vs central finite differences
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
      worst = std::max(worst, gradient_check(seed, 1e-5));
    checks.push_back({"autodiff gradients vs finite differences (100 graphs)", worst < 1e-6,
                      worst, 1e-6});
  }

  {  // analytic Gram entries vs quadrature
    double worst = 0.0;
    for (int n : {4, 16, 64}) {
      const NodalBasis basis(n, 0.0, 1.0);
      const GramMatrix gram(basis);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          worst = std::max(worst,
                           std::abs(gram.entry(i, j) - quad_phi_product(basis, i, j, 10000)));
    }
    checks.push_back({"Gram entries vs quadrature (N = 4, 16, 64)", worst < 1e-10, worst, 1e-10});
  }

  {  // Theorem-of-the-build: 0.5 u^T G u has variational derivative u
    const int n = 32;
    const NodalBasis basis(n, 0.0, 1.0);
    const GramMatrix gram(basis);
    std::vector<double> dense(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dense[static_cast<std::size_t>(i) * n + j] = gram.entry(i, j);
    Rng rng(7);
    std::vector<double> u(static_cast<std::size_t>(n));
    for (double& v : u) v = rng.uniform(-1.0, 1.0);
    Tape tape;
    const int u_node = tape.leaf(Tensor::vector(u));
    const int g_node = tape.leaf(Tensor::matrix(n, n, dense));
    const int ham = tape.scalar_mul(tape.dot(u_node, tape.matmul(g_node, u_node)), 0.5);
    const Tensor grad = tape.gradient_wrt_input(ham, u_node);
    const FieldVector vd = variational_derivative(grad.view(), gram);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(vd[static_cast<std::size_t>(i)] -
                                       u[static_cast<std::size_t>(i)]) /
                                  std::max(1.0, std::abs(u[static_cast<std::size_t>(i)])));
    checks.push_back({"variational derivative of 0.5<u,u> equals u", worst < 1e-8, worst, 1e-8});
  }

  {  // Riesz consistency for random models
    const int n = 16;
    const NodalBasis basis(n, 0.0, 1.0);
    const GramMatrix gram(basis);
    const QuadratureRule rule = trapezoid_rule(basis);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const DeepONetModel model = init_model(n, 6, 12, 3, seed);
      Rng rng(seed * 77 + 1);
      std::vector<double> u(static_cast<std::size_t>(n)), ut(u.size()), wu(u.size()), wt(u.size());
      for (auto* v : {&u, &ut, &wu, &wt})
        for (double& x : *v) x = rng.uniform(-1.0, 1.0);
      auto [vd_u, vd_ut] = grad_hamiltonian(model, u, ut, rule, gram);
      const double paired = l2_inner(vd_u, wu, gram) + l2_inner(vd_ut, wt, gram);
      const double eps = 1e-6;
      auto shifted = [&](double s) {
        std::vector<double> us(u), uts(ut);
        for (std::size_t i = 0; i < us.size(); ++i) {
          us[i] += s * wu[i];
          uts[i] += s * wt[i];
        }
        return hamiltonian_value(model, us, uts, rule);
      };
      const double fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
      worst = std::max(worst, std::abs(paired - fd) / std::max(1.0, std::abs(fd)));
    }
    checks.push_back({"Riesz consistency of 20 random models", worst < 1e-5, worst, 1e-5});
  }

  int failures = 0;
  for (const Check& c : checks) {
    if (!c.ok) ++failures;
    if (verbose)
      std::printf("[%s] %s (measured %.3e, bound %.1e)\n", c.ok ? "ok" : "FAIL", c.name,
                  c.measured, c.bound);
  }
  return failures;
}

}  // namespace hamwave
