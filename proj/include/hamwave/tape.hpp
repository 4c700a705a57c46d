// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hamwave/tensor.hpp"

namespace hamwave {

/// Operation kinds a tape can record. The set is deliberately small and
/// closed: the reverse rule of every op is expressible with ops from the same
/// set, which is what makes gradients-of-gradients work (the dynamics loss
/// differentiates through the gradient of the Hamiltonian).
enum class Op : std::uint8_t {
  leaf,
  add,         // elementwise; one side may be a scalar
  scalar_mul,  // multiply by a compile-time constant
  mul,         // elementwise; one side may be a scalar
  matmul,      // with transpose flags; also matrix*vector and vector outer product
  tanh,
  sum,         // reduce all entries to a scalar
  dot,         // inner product of two equal-length vectors
  concat,      // join two vectors
  slice,       // contiguous sub-vector
  spd_solve,   // solve S x = rhs with a fixed symmetric positive-definite S
};

/// Fixed self-adjoint positive-definite linear operator usable on a tape.
/// Symmetry is what makes the reverse rule of spd_solve another spd_solve.
struct SpdOperator {
  virtual ~SpdOperator() = default;
  virtual int dim() const = 0;
  virtual void solve(std::span<const double> rhs, std::span<double> out) const = 0;
};

/// Append-only record of one forward computation (define-by-run). Node ids
/// are indices into the tape; parents always precede their node, so the tape
/// order is a topological order. A tape is confined to a single thread; run
/// concurrent evaluations on separate tapes.
class Tape {
public:
  struct Node {
    Op op = Op::leaf;
    int a = -1, b = -1;  // parent ids
    Tensor value;
    double c = 0.0;             // scalar_mul factor
    int i0 = 0, i1 = 0;         // slice start / length
    bool ta = false, tb = false;  // matmul transpose flags
    std::shared_ptr<const SpdOperator> solver;
  };

  int size() const { return static_cast<int>(nodes_.size()); }
  const Tensor& value(int id) const;
  const Node& node(int id) const;
  void reserve(std::size_t n) { nodes_.reserve(n); }

  int leaf(Tensor t);
  int add(int a, int b);
  int scalar_mul(int a, double c);
  int mul(int a, int b);
  int matmul(int a, int b, bool ta = false, bool tb = false);
  int tanh(int a);
  int sum(int a);
  int dot(int a, int b);
  int concat(int a, int b);
  int slice(int a, int start, int len);
  int spd_solve(std::shared_ptr<const SpdOperator> solver, int rhs);

  /// a - b, recorded as add(a, scalar_mul(b, -1)).
  int sub(int a, int b) { return add(a, scalar_mul(b, -1.0)); }

  /// Numeric reverse pass from a scalar loss. Returns one adjoint per node;
  /// nodes that do not influence the loss get an empty tensor.
  std::vector<Tensor> backward(int loss) const;

  /// Same, but propagates only through nodes that some target depends on.
  /// Only the targets' adjoints are guaranteed to be filled in.
  std::vector<Tensor> backward(int loss, std::span<const int> targets) const;

  /// Reverse pass recorded as new tape nodes, so the returned adjoints are
  /// themselves differentiable. Returns one node id per target; targets the
  /// loss does not depend on get a fresh zero leaf of matching shape.
  std::vector<int> backward_on_tape(int loss, std::span<const int> targets);

  /// Adjoint of one designated input of a scalar loss (zero tensor if the
  /// input does not participate).
  Tensor gradient_wrt_input(int loss, int input) const;

private:
  int record(Node n);
  void check_id(int id, const char* who) const;
  void check_scalar_loss(int loss, const char* who) const;
  /// mask[i] = 1 iff node i depends on at least one target.
  std::vector<char> reach_mask(std::span<const int> targets, int upto) const;

  std::vector<Node> nodes_;
};

}  // namespace hamwave
