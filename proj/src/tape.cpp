// SPDX-License-Identifier: Apache-2.0
#include "hamwave/tape.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "hamwave/error.hpp"

namespace hamwave {

namespace {

std::string op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::add: return "add";
    case Op::scalar_mul: return "scalar_mul";
    case Op::mul: return "mul";
    case Op::matmul: return "matmul";
    case Op::tanh: return "tanh";
    case Op::sum: return "sum";
    case Op::dot: return "dot";
    case Op::concat: return "concat";
    case Op::slice: return "slice";
    case Op::spd_solve: return "spd_solve";
  }
  return "?";
}

[[noreturn]] void shape_fail(Op op, const Tensor& a, const Tensor& b) {
  fail_invalid("tape: " + op_name(op) + " got incompatible shapes " + a.shape_str() + " and " +
               b.shape_str());
}

}  // namespace

const Tensor& Tape::value(int id) const {
  check_id(id, "value");
  return nodes_[static_cast<std::size_t>(id)].value;
}

const Tape::Node& Tape::node(int id) const {
  check_id(id, "node");
  return nodes_[static_cast<std::size_t>(id)];
}

void Tape::check_id(int id, const char* who) const {
  if (id < 0 || id >= size())
    fail_invalid(std::string("tape: ") + who + ": node id " + std::to_string(id) +
                 " is not on this tape (size " + std::to_string(size()) + ")");
}

void Tape::check_scalar_loss(int loss, const char* who) const {
  check_id(loss, who);
  if (!value(loss).is_scalar())
    fail_invalid(std::string("tape: ") + who + ": loss must be a scalar, got shape " +
                 value(loss).shape_str());
}

int Tape::record(Node n) {
  nodes_.push_back(std::move(n));
  return size() - 1;
}

int Tape::leaf(Tensor t) {
  Node n;
  n.op = Op::leaf;
  n.value = std::move(t);
  return record(std::move(n));
}

int Tape::add(int a, int b) {
  check_id(a, "add");
  check_id(b, "add");
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  Tensor out;
  if (va.same_shape(vb)) {
    std::vector<double> d(va.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = va[i] + vb[i];
    out = Tensor::raw(va.shape(), std::move(d));
  } else if (vb.is_scalar()) {
    std::vector<double> d(va.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = va[i] + vb[0];
    out = Tensor::raw(va.shape(), std::move(d));
  } else if (va.is_scalar()) {
    std::vector<double> d(vb.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = va[0] + vb[i];
    out = Tensor::raw(vb.shape(), std::move(d));
  } else {
    shape_fail(Op::add, va, vb);
  }
  Node n;
  n.op = Op::add;
  n.a = a;
  n.b = b;
  n.value = std::move(out);
  return record(std::move(n));
}

int Tape::scalar_mul(int a, double c) {
  check_id(a, "scalar_mul");
  if (!std::isfinite(c)) fail_numeric("tape: scalar_mul with non-finite constant");
  const Tensor& va = value(a);
  std::vector<double> d(va.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = c * va[i];
  Node n;
  n.op = Op::scalar_mul;
  n.a = a;
  n.c = c;
  n.value = Tensor::raw(va.shape(), std::move(d));
  return record(std::move(n));
}

int Tape::mul(int a, int b) {
  check_id(a, "mul");
  check_id(b, "mul");
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  Tensor out;
  if (va.same_shape(vb)) {
    std::vector<double> d(va.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = va[i] * vb[i];
    out = Tensor::raw(va.shape(), std::move(d));
  } else if (vb.is_scalar()) {
    std::vector<double> d(va.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = va[i] * vb[0];
    out = Tensor::raw(va.shape(), std::move(d));
  } else if (va.is_scalar()) {
    std::vector<double> d(vb.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = va[0] * vb[i];
    out = Tensor::raw(vb.shape(), std::move(d));
  } else {
    shape_fail(Op::mul, va, vb);
  }
  Node n;
  n.op = Op::mul;
  n.a = a;
  n.b = b;
  n.value = std::move(out);
  return record(std::move(n));
}

int Tape::matmul(int a, int b, bool ta, bool tb) {
  check_id(a, "matmul");
  check_id(b, "matmul");
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  Tensor out;
  if (va.rank() == 2 && vb.rank() == 2) {
    const int m = ta ? va.cols() : va.rows();
    const int k = ta ? va.rows() : va.cols();
    const int k2 = tb ? vb.cols() : vb.rows();
    const int nn = tb ? vb.rows() : vb.cols();
    if (k != k2) shape_fail(Op::matmul, va, vb);
    std::vector<double> d(static_cast<std::size_t>(m) * nn, 0.0);
    const int ar = va.rows();  // stride bookkeeping uses stored orientation
    const int br = vb.rows();
    (void)ar;
    (void)br;
    for (int i = 0; i < m; ++i)
      for (int l = 0; l < k; ++l) {
        const double av = ta ? va[static_cast<std::size_t>(l) * va.cols() + i]
                             : va[static_cast<std::size_t>(i) * va.cols() + l];
        if (av == 0.0) continue;
        for (int j = 0; j < nn; ++j) {
          const double bv = tb ? vb[static_cast<std::size_t>(j) * vb.cols() + l]
                               : vb[static_cast<std::size_t>(l) * vb.cols() + j];
          d[static_cast<std::size_t>(i) * nn + j] += av * bv;
        }
      }
    out = Tensor::raw({m, nn}, std::move(d));
  } else if (va.rank() == 2 && vb.rank() == 1) {
    if (tb) fail_invalid("tape: matmul matrix*vector does not take a transposed vector");
    const int m = ta ? va.cols() : va.rows();
    const int k = ta ? va.rows() : va.cols();
    if (vb.length() != k) shape_fail(Op::matmul, va, vb);
    std::vector<double> d(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      if (ta) {
        for (int l = 0; l < k; ++l) s += va[static_cast<std::size_t>(l) * va.cols() + i] * vb[l];
      } else {
        const double* row = va.data() + static_cast<std::size_t>(i) * va.cols();
        for (int l = 0; l < k; ++l) s += row[l] * vb[l];
      }
      d[static_cast<std::size_t>(i)] = s;
    }
    out = Tensor::raw({m}, std::move(d));
  } else if (va.rank() == 1 && vb.rank() == 1 && tb) {
    if (ta) fail_invalid("tape: matmul outer product does not take a transposed left vector");
    const int m = va.length();
    const int k = vb.length();
    std::vector<double> d(static_cast<std::size_t>(m) * k);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < k; ++j) d[static_cast<std::size_t>(i) * k + j] = va[i] * vb[j];
    out = Tensor::raw({m, k}, std::move(d));
  } else {
    shape_fail(Op::matmul, va, vb);
  }
  Node n;
  n.op = Op::matmul;
  n.a = a;
  n.b = b;
  n.ta = ta;
  n.tb = tb;
  n.value = std::move(out);
  return record(std::move(n));
}

int Tape::tanh(int a) {
  check_id(a, "tanh");
  const Tensor& va = value(a);
  std::vector<double> d(va.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::tanh(va[i]);
  Node n;
  n.op = Op::tanh;
  n.a = a;
  n.value = Tensor::raw(va.shape(), std::move(d));
  return record(std::move(n));
}

int Tape::sum(int a) {
  check_id(a, "sum");
  const Tensor& va = value(a);
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i];
  Node n;
  n.op = Op::sum;
  n.a = a;
  n.value = Tensor::raw({}, {s});
  return record(std::move(n));
}

int Tape::dot(int a, int b) {
  check_id(a, "dot");
  check_id(b, "dot");
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rank() != 1 || vb.rank() != 1 || va.length() != vb.length()) shape_fail(Op::dot, va, vb);
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
  Node n;
  n.op = Op::dot;
  n.a = a;
  n.b = b;
  n.value = Tensor::raw({}, {s});
  return record(std::move(n));
}

int Tape::concat(int a, int b) {
  check_id(a, "concat");
  check_id(b, "concat");
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (va.rank() != 1 || vb.rank() != 1) shape_fail(Op::concat, va, vb);
  std::vector<double> d;
  d.reserve(va.size() + vb.size());
  d.insert(d.end(), va.data(), va.data() + va.size());
  d.insert(d.end(), vb.data(), vb.data() + vb.size());
  const int total = static_cast<int>(d.size());
  Node n;
  n.op = Op::concat;
  n.a = a;
  n.b = b;
  n.value = Tensor::raw({total}, std::move(d));
  return record(std::move(n));
}

int Tape::slice(int a, int start, int len) {
  check_id(a, "slice");
  const Tensor& va = value(a);
  if (va.rank() != 1) fail_invalid("tape: slice expects a vector, got " + va.shape_str());
  if (start < 0 || len <= 0 || start + len > va.length())
    fail_invalid("tape: slice [" + std::to_string(start) + ", " + std::to_string(start + len) +
                 ") out of range for length " + std::to_string(va.length()));
  std::vector<double> d(va.data() + start, va.data() + start + len);
  Node n;
  n.op = Op::slice;
  n.a = a;
  n.i0 = start;
  n.i1 = len;
  n.value = Tensor::raw({len}, std::move(d));
  return record(std::move(n));
}

int Tape::spd_solve(std::shared_ptr<const SpdOperator> solver, int rhs) {
  check_id(rhs, "spd_solve");
  if (!solver) fail_invalid("tape: spd_solve with null operator");
  const Tensor& vr = value(rhs);
  if (vr.rank() != 1 || vr.length() != solver->dim())
    fail_invalid("tape: spd_solve rhs " + vr.shape_str() + " does not match operator dim " +
                 std::to_string(solver->dim()));
  std::vector<double> d(vr.size());
  solver->solve(vr.view(), {d.data(), d.size()});
  Node n;
  n.op = Op::spd_solve;
  n.a = rhs;
  n.solver = std::move(solver);
  n.value = Tensor::raw(vr.shape(), std::move(d));
  return record(std::move(n));
}

std::vector<char> Tape::reach_mask(std::span<const int> targets, int upto) const {
  std::vector<char> mask(static_cast<std::size_t>(upto) + 1, 0);
  for (int t : targets) {
    check_id(t, "backward targets");
    if (t <= upto) mask[static_cast<std::size_t>(t)] = 1;
  }
  for (int i = 0; i <= upto; ++i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (mask[static_cast<std::size_t>(i)]) continue;
    if ((n.a >= 0 && mask[static_cast<std::size_t>(n.a)]) ||
        (n.b >= 0 && mask[static_cast<std::size_t>(n.b)]))
      mask[static_cast<std::size_t>(i)] = 1;
  }
  return mask;
}

std::vector<Tensor> Tape::backward(int loss) const { return backward(loss, {}); }

std::vector<Tensor> Tape::backward(int loss, std::span<const int> targets) const {
  check_scalar_loss(loss, "backward");
  std::vector<char> mask;
  if (!targets.empty()) mask = reach_mask(targets, loss);
  auto masked = [&](int id) { return mask.empty() || mask[static_cast<std::size_t>(id)]; };

  std::vector<Tensor> adj(nodes_.size());
  if (!masked(loss)) return adj;  // loss does not depend on any target
  adj[static_cast<std::size_t>(loss)] = Tensor::scalar(1.0);

  auto slot = [&](int id) -> Tensor& {
    Tensor& t = adj[static_cast<std::size_t>(id)];
    if (t.empty()) t = Tensor::zeros(nodes_[static_cast<std::size_t>(id)].value.shape());
    return t;
  };
  // adds g into the parent's slot, summing when the parent is a scalar that
  // was broadcast against a tensor
  auto acc_same_or_reduced = [&](int p, const Tensor& g, double scale) {
    Tensor& s = slot(p);
    if (s.same_shape(g)) {
      for (std::size_t i = 0; i < g.size(); ++i) s[i] += scale * g[i];
    } else {
      double total = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) total += g[i];
      s[0] += scale * total;
    }
  };

  for (int i = loss; i >= 0; --i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    const Tensor& g = adj[static_cast<std::size_t>(i)];
    if (g.empty() || n.op == Op::leaf) continue;
    const bool want_a = n.a >= 0 && masked(n.a);
    const bool want_b = n.b >= 0 && masked(n.b);
    if (!want_a && !want_b) continue;
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::add: {
        if (want_a) acc_same_or_reduced(n.a, g, 1.0);
        if (want_b) acc_same_or_reduced(n.b, g, 1.0);
        break;
      }
      case Op::scalar_mul: {
        if (want_a) acc_same_or_reduced(n.a, g, n.c);
        break;
      }
      case Op::mul: {
        const Tensor& va = nodes_[static_cast<std::size_t>(n.a)].value;
        const Tensor& vb = nodes_[static_cast<std::size_t>(n.b)].value;
        if (want_a) {
          Tensor& s = slot(n.a);
          if (va.same_shape(vb) || vb.is_scalar()) {
            if (s.same_shape(g)) {
              const double bscale = vb.is_scalar() ? vb[0] : 0.0;
              for (std::size_t j = 0; j < g.size(); ++j)
                s[j] += g[j] * (vb.is_scalar() ? bscale : vb[j]);
            } else {  // a scalar (both scalars case lands in same_shape above)
              double total = 0.0;
              for (std::size_t j = 0; j < g.size(); ++j) total += g[j] * vb[j];
              s[0] += total;
            }
          } else {  // a scalar, b tensor
            double total = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) total += g[j] * vb[j];
            s[0] += total;
          }
        }
        if (want_b) {
          Tensor& s = slot(n.b);
          if (vb.same_shape(va) || va.is_scalar()) {
            if (s.same_shape(g)) {
              const double ascale = va.is_scalar() ? va[0] : 0.0;
              for (std::size_t j = 0; j < g.size(); ++j)
                s[j] += g[j] * (va.is_scalar() ? ascale : va[j]);
            } else {
              double total = 0.0;
              for (std::size_t j = 0; j < g.size(); ++j) total += g[j] * va[j];
              s[0] += total;
            }
          } else {  // b scalar, a tensor
            double total = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) total += g[j] * va[j];
            s[0] += total;
          }
        }
        break;
      }
      case Op::matmul: {
        const Tensor& va = nodes_[static_cast<std::size_t>(n.a)].value;
        const Tensor& vb = nodes_[static_cast<std::size_t>(n.b)].value;
        if (va.rank() == 2 && vb.rank() == 2) {
          const int m = n.ta ? va.cols() : va.rows();
          const int k = n.ta ? va.rows() : va.cols();
          const int nn = n.tb ? vb.rows() : vb.cols();
          auto Aprime = [&](int i2, int l) {
            return n.ta ? va[static_cast<std::size_t>(l) * va.cols() + i2]
                        : va[static_cast<std::size_t>(i2) * va.cols() + l];
          };
          auto Bprime = [&](int l, int j) {
            return n.tb ? vb[static_cast<std::size_t>(j) * vb.cols() + l]
                        : vb[static_cast<std::size_t>(l) * vb.cols() + j];
          };
          if (want_a) {
            Tensor& s = slot(n.a);
            for (int i2 = 0; i2 < m; ++i2)
              for (int l = 0; l < k; ++l) {
                double v = 0.0;
                for (int j = 0; j < nn; ++j)
                  v += g[static_cast<std::size_t>(i2) * nn + j] * Bprime(l, j);
                if (n.ta)
                  s[static_cast<std::size_t>(l) * va.cols() + i2] += v;
                else
                  s[static_cast<std::size_t>(i2) * va.cols() + l] += v;
              }
          }
          if (want_b) {
            Tensor& s = slot(n.b);
            for (int l = 0; l < k; ++l)
              for (int j = 0; j < nn; ++j) {
                double v = 0.0;
                for (int i2 = 0; i2 < m; ++i2)
                  v += Aprime(i2, l) * g[static_cast<std::size_t>(i2) * nn + j];
                if (n.tb)
                  s[static_cast<std::size_t>(j) * vb.cols() + l] += v;
                else
                  s[static_cast<std::size_t>(l) * vb.cols() + j] += v;
              }
          }
        } else if (va.rank() == 2 && vb.rank() == 1) {
          const int m = n.ta ? va.cols() : va.rows();
          const int k = n.ta ? va.rows() : va.cols();
          if (want_a) {
            Tensor& s = slot(n.a);
            for (int i2 = 0; i2 < m; ++i2)
              for (int l = 0; l < k; ++l) {
                const double v = g[static_cast<std::size_t>(i2)] * vb[l];
                if (n.ta)
                  s[static_cast<std::size_t>(l) * va.cols() + i2] += v;
                else
                  s[static_cast<std::size_t>(i2) * va.cols() + l] += v;
              }
          }
          if (want_b) {
            Tensor& s = slot(n.b);
            for (int l = 0; l < k; ++l) {
              double v = 0.0;
              for (int i2 = 0; i2 < m; ++i2) {
                const double av = n.ta ? va[static_cast<std::size_t>(l) * va.cols() + i2]
                                       : va[static_cast<std::size_t>(i2) * va.cols() + l];
                v += av * g[static_cast<std::size_t>(i2)];
              }
              s[static_cast<std::size_t>(l)] += v;
            }
          }
        } else {  // outer product of two vectors
          const int m = va.length();
          const int k = vb.length();
          if (want_a) {
            Tensor& s = slot(n.a);
            for (int i2 = 0; i2 < m; ++i2) {
              double v = 0.0;
              for (int j = 0; j < k; ++j) v += g[static_cast<std::size_t>(i2) * k + j] * vb[j];
              s[static_cast<std::size_t>(i2)] += v;
            }
          }
          if (want_b) {
            Tensor& s = slot(n.b);
            for (int j = 0; j < k; ++j) {
              double v = 0.0;
              for (int i2 = 0; i2 < m; ++i2) v += g[static_cast<std::size_t>(i2) * k + j] * va[i2];
              s[static_cast<std::size_t>(j)] += v;
            }
          }
        }
        break;
      }
      case Op::tanh: {
        if (want_a) {
          Tensor& s = slot(n.a);
          const Tensor& t = n.value;
          for (std::size_t j = 0; j < g.size(); ++j) s[j] += g[j] * (1.0 - t[j] * t[j]);
        }
        break;
      }
      case Op::sum: {
        if (want_a) {
          Tensor& s = slot(n.a);
          for (std::size_t j = 0; j < s.size(); ++j) s[j] += g[0];
        }
        break;
      }
      case Op::dot: {
        const Tensor& va = nodes_[static_cast<std::size_t>(n.a)].value;
        const Tensor& vb = nodes_[static_cast<std::size_t>(n.b)].value;
        if (want_a) {
          Tensor& s = slot(n.a);
          for (std::size_t j = 0; j < s.size(); ++j) s[j] += g[0] * vb[j];
        }
        if (want_b) {
          Tensor& s = slot(n.b);
          for (std::size_t j = 0; j < s.size(); ++j) s[j] += g[0] * va[j];
        }
        break;
      }
      case Op::concat: {
        const std::size_t na = nodes_[static_cast<std::size_t>(n.a)].value.size();
        if (want_a) {
          Tensor& s = slot(n.a);
          for (std::size_t j = 0; j < na; ++j) s[j] += g[j];
        }
        if (want_b) {
          Tensor& s = slot(n.b);
          for (std::size_t j = 0; j < s.size(); ++j) s[j] += g[na + j];
        }
        break;
      }
      case Op::slice: {
        if (want_a) {
          Tensor& s = slot(n.a);
          for (int j = 0; j < n.i1; ++j)
            s[static_cast<std::size_t>(n.i0 + j)] += g[static_cast<std::size_t>(j)];
        }
        break;
      }
      case Op::spd_solve: {
        if (want_a) {
          Tensor& s = slot(n.a);
          std::vector<double> tmp(g.size());
          n.solver->solve(g.view(), {tmp.data(), tmp.size()});
          for (std::size_t j = 0; j < tmp.size(); ++j) s[j] += tmp[j];
        }
        break;
      }
    }
  }
  return adj;
}

std::vector<int> Tape::backward_on_tape(int loss, std::span<const int> targets) {
  check_scalar_loss(loss, "backward_on_tape");
  if (targets.empty()) return {};
  std::vector<char> mask = reach_mask(targets, loss);
  std::vector<int> adj(static_cast<std::size_t>(loss) + 1, -1);

  auto fill_results = [&] {
    std::vector<int> out;
    out.reserve(targets.size());
    for (int t : targets) {
      int id = adj[static_cast<std::size_t>(t)];
      if (id < 0) id = leaf(Tensor::zeros(value(t).shape()));
      out.push_back(id);
    }
    return out;
  };

  if (!mask[static_cast<std::size_t>(loss)]) return fill_results();
  adj[static_cast<std::size_t>(loss)] = leaf(Tensor::scalar(1.0));

  auto acc = [&](int p, int contrib) {
    int& a = adj[static_cast<std::size_t>(p)];
    a = (a < 0) ? contrib : add(a, contrib);
  };
  // reduces a contribution to the parent's shape when the parent is a scalar
  // that was broadcast against a tensor
  auto fit = [&](int p, int contrib) {
    if (value(p).is_scalar() && !value(contrib).is_scalar()) return sum(contrib);
    return contrib;
  };

  for (int i = loss; i >= 0; --i) {
    if (adj[static_cast<std::size_t>(i)] < 0) continue;
    // copy the descriptor fields: appending adjoint nodes may reallocate the
    // node vector, so references into it must not be held across appends
    struct {
      Op op;
      int a, b, i0, i1;
      double c;
      bool ta, tb;
      std::shared_ptr<const SpdOperator> solver;
      std::vector<int> out_shape;
    } n;
    {
      const Node& src = nodes_[static_cast<std::size_t>(i)];
      n.op = src.op;
      n.a = src.a;
      n.b = src.b;
      n.i0 = src.i0;
      n.i1 = src.i1;
      n.c = src.c;
      n.ta = src.ta;
      n.tb = src.tb;
      n.solver = src.solver;
      n.out_shape = src.value.shape();
    }
    if (n.op == Op::leaf) continue;
    const int g = adj[static_cast<std::size_t>(i)];
    const bool want_a = n.a >= 0 && mask[static_cast<std::size_t>(n.a)];
    const bool want_b = n.b >= 0 && mask[static_cast<std::size_t>(n.b)];
    if (!want_a && !want_b) continue;
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::add:
        if (want_a) acc(n.a, fit(n.a, g));
        if (want_b) acc(n.b, fit(n.b, g));
        break;
      case Op::scalar_mul:
        if (want_a) acc(n.a, scalar_mul(g, n.c));
        break;
      case Op::mul:
        if (want_a) acc(n.a, fit(n.a, mul(g, n.b)));
        if (want_b) acc(n.b, fit(n.b, mul(g, n.a)));
        break;
      case Op::matmul: {
        const int ra = value(n.a).rank();
        const int rb = value(n.b).rank();
        if (ra == 2 && rb == 2) {
          if (want_a) acc(n.a, n.ta ? matmul(n.b, g, n.tb, true) : matmul(g, n.b, false, !n.tb));
          if (want_b) acc(n.b, n.tb ? matmul(g, n.a, true, n.ta) : matmul(n.a, g, !n.ta, false));
        } else if (ra == 2 && rb == 1) {
          if (want_a) acc(n.a, n.ta ? matmul(n.b, g, false, true) : matmul(g, n.b, false, true));
          if (want_b) acc(n.b, matmul(n.a, g, !n.ta, false));
        } else {  // outer product
          if (want_a) acc(n.a, matmul(g, n.b, false, false));
          if (want_b) acc(n.b, matmul(g, n.a, true, false));
        }
        break;
      }
      case Op::tanh: {
        if (want_a) {
          const int ones = leaf(Tensor::ones(n.out_shape));
          const int deriv = add(ones, scalar_mul(mul(i, i), -1.0));
          acc(n.a, mul(g, deriv));
        }
        break;
      }
      case Op::sum: {
        if (want_a) {
          if (value(n.a).is_scalar()) {
            acc(n.a, g);
          } else {
            const int ones = leaf(Tensor::ones(value(n.a).shape()));
            acc(n.a, mul(ones, g));
          }
        }
        break;
      }
      case Op::dot:
        if (want_a) acc(n.a, mul(n.b, g));
        if (want_b) acc(n.b, mul(n.a, g));
        break;
      case Op::concat: {
        const int na = value(n.a).length();
        const int nb = value(n.b).length();
        if (want_a) acc(n.a, slice(g, 0, na));
        if (want_b) acc(n.b, slice(g, na, nb));
        break;
      }
      case Op::slice: {
        if (want_a) {
          const int total = value(n.a).length();
          int padded = g;
          if (n.i0 > 0) padded = concat(leaf(Tensor::zeros({n.i0})), padded);
          const int rest = total - n.i0 - n.i1;
          if (rest > 0) padded = concat(padded, leaf(Tensor::zeros({rest})));
          acc(n.a, padded);
        }
        break;
      }
      case Op::spd_solve:
        if (want_a) acc(n.a, spd_solve(n.solver, g));
        break;
    }
  }
  return fill_results();
}

Tensor Tape::gradient_wrt_input(int loss, int input) const {
  check_scalar_loss(loss, "gradient_wrt_input");
  check_id(input, "gradient_wrt_input");
  const int targets[] = {input};
  std::vector<Tensor> adj = backward(loss, targets);
  Tensor g = std::move(adj[static_cast<std::size_t>(input)]);
  if (g.empty()) g = Tensor::zeros(value(input).shape());
  return g;
}

}  // namespace hamwave
