// SPDX-License-Identifier: Apache-2.0
#include "hamwave/deeponet.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "hamwave/binio.hpp"
#include "hamwave/error.hpp"
#include "hamwave/hash.hpp"
#include "hamwave/rng.hpp"

namespace hamwave {

int MlpParams::input_dim() const {
  if (weights.empty()) fail_invalid("mlp: no layers");
  return weights.front().cols();
}

int MlpParams::output_dim() const {
  if (weights.empty()) fail_invalid("mlp: no layers");
  return weights.back().rows();
}

std::size_t MlpParams::n_parameters() const {
  std::size_t n = 0;
  for (const Tensor& w : weights) n += w.size();
  for (const Tensor& b : biases) n += b.size();
  return n;
}

void MlpParams::validate() const {
  if (weights.empty() || weights.size() != biases.size()) fail_invalid("mlp: layer lists inconsistent");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rank() != 2 || biases[l].rank() != 1) fail_invalid("mlp: bad layer ranks");
    if (weights[l].rows() != biases[l].length()) fail_invalid("mlp: bias length mismatch");
    if (l > 0 && weights[l].cols() != weights[l - 1].rows())
      fail_invalid("mlp: consecutive layer dimensions incompatible");
    if (!weights[l].all_finite() || !biases[l].all_finite()) fail_numeric("mlp: non-finite parameter");
  }
}

std::vector<double> mlp_eval(const MlpParams& mlp, std::span<const double> x) {
  if (static_cast<int>(x.size()) != mlp.input_dim()) fail_invalid("mlp: input length mismatch");
  std::vector<double> cur(x.begin(), x.end());
  for (int l = 0; l < mlp.n_layers(); ++l) {
    const Tensor& w = mlp.weights[static_cast<std::size_t>(l)];
    const Tensor& b = mlp.biases[static_cast<std::size_t>(l)];
    std::vector<double> next(static_cast<std::size_t>(w.rows()));
    for (int i = 0; i < w.rows(); ++i) {
      double s = b[static_cast<std::size_t>(i)];
      const double* row = w.data() + static_cast<std::size_t>(i) * w.cols();
      for (int j = 0; j < w.cols(); ++j) s += row[j] * cur[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(i)] = l + 1 < mlp.n_layers() ? std::tanh(s) : s;
    }
    cur = std::move(next);
  }
  return cur;
}

double QuadratureRule::total() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

QuadratureRule trapezoid_rule(const NodalBasis& basis) {
  QuadratureRule rule;
  rule.nodes = basis.nodes();
  rule.weights.assign(rule.nodes.size(), basis.h());
  return rule;
}

namespace {

MlpParams init_mlp(int in, int out, int hidden, int layers, Rng& rng) {
  if (in < 1 || out < 1 || hidden < 1 || layers < 1) fail_invalid("mlp: sizes must be >= 1");
  MlpParams mlp;
  for (int l = 0; l < layers; ++l) {
    const int li = l == 0 ? in : hidden;
    const int lo = l == layers - 1 ? out : hidden;
    const double bound = 1.0 / std::sqrt(static_cast<double>(li));
    std::vector<double> w(static_cast<std::size_t>(lo) * li);
    for (double& v : w) v = rng.uniform(-bound, bound);
    std::vector<double> b(static_cast<std::size_t>(lo));
    for (double& v : b) v = rng.uniform(-bound, bound);
    mlp.weights.push_back(Tensor::matrix(lo, li, std::move(w)));
    mlp.biases.push_back(Tensor::vector(std::move(b)));
  }
  return mlp;
}

}  // namespace

std::uint64_t DeepONetModel::config_hash() const {
  ConfigHasher h;
  h.add("kind", std::string("deeponet"));
  h.add("nx", std::int64_t{nx});
  h.add("p", std::int64_t{p});
  h.add("hidden", std::int64_t{hidden});
  h.add("layers", std::int64_t{layers});
  h.add("seed", seed);
  h.add("x_lo", x_lo);
  h.add("x_hi", x_hi);
  return h.hash();
}

void DeepONetModel::validate() const {
  if (nx < 3 || p < 1) fail_invalid("deeponet: bad sizes");
  branch.validate();
  trunk.validate();
  if (branch.input_dim() != 2 * nx) fail_invalid("deeponet: branch input must be 2*nx");
  if (branch.output_dim() != p || trunk.output_dim() != p)
    fail_invalid("deeponet: branch and trunk must both output p values");
  if (trunk.input_dim() != 1) fail_invalid("deeponet: trunk input must be the single location");
}

DeepONetModel init_model(int nx, int p, int hidden, int layers, std::uint64_t seed, double x_lo,
                         double x_hi) {
  if (nx < 3) fail_invalid("deeponet: nx must be >= 3");
  DeepONetModel m;
  m.nx = nx;
  m.p = p;
  m.hidden = hidden;
  m.layers = layers;
  m.seed = seed;
  m.x_lo = x_lo;
  m.x_hi = x_hi;
  Rng rng(seed);
  m.branch = init_mlp(2 * nx, p, hidden, layers, rng);
  m.trunk = init_mlp(1, p, hidden, layers, rng);
  m.validate();
  return m;
}

MlpNodes mlp_on_tape(Tape& tape, const MlpParams& mlp) {
  MlpNodes nodes;
  for (int l = 0; l < mlp.n_layers(); ++l) {
    nodes.weights.push_back(tape.leaf(mlp.weights[static_cast<std::size_t>(l)]));
    nodes.biases.push_back(tape.leaf(mlp.biases[static_cast<std::size_t>(l)]));
  }
  return nodes;
}

int mlp_forward(Tape& tape, const MlpNodes& nodes, int x) {
  const int layers = static_cast<int>(nodes.weights.size());
  int cur = x;
  for (int l = 0; l < layers; ++l) {
    cur = tape.add(tape.matmul(nodes.weights[static_cast<std::size_t>(l)], cur),
                   nodes.biases[static_cast<std::size_t>(l)]);
    if (l + 1 < layers) cur = tape.tanh(cur);
  }
  return cur;
}

DeepONetOnTape::DeepONetOnTape(Tape& tape, const DeepONetModel& model)
    : tape_(&tape), model_(&model) {
  model.validate();
  branch_nodes_ = mlp_on_tape(tape, model.branch);
  trunk_nodes_ = mlp_on_tape(tape, model.trunk);
}

int DeepONetOnTape::branch(int w) const {
  if (tape_->value(w).rank() != 1 || tape_->value(w).length() != 2 * model_->nx)
    fail_invalid("deeponet: branch input must have length 2*nx");
  return mlp_forward(*tape_, branch_nodes_, w);
}

int DeepONetOnTape::trunk(double y) const {
  if (!(y >= model_->x_lo && y <= model_->x_hi))
    fail_invalid("deeponet: location y=" + format_double(y) + " outside the domain [" +
                 format_double(model_->x_lo) + ", " + format_double(model_->x_hi) + "]");
  const int y_leaf = tape_->leaf(Tensor::vector({y}));
  return mlp_forward(*tape_, trunk_nodes_, y_leaf);
}

int DeepONetOnTape::density(int w, double y) const { return tape_->dot(branch(w), trunk(y)); }

int DeepONetOnTape::hamiltonian(int w, const QuadratureRule& rule) const {
  if (rule.nodes.empty()) fail_invalid("deeponet: empty quadrature rule");
  const int c = branch(w);
  int acc = -1;
  for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
    const int term = tape_->scalar_mul(tape_->dot(c, trunk(rule.nodes[m])), rule.weights[m]);
    acc = acc < 0 ? term : tape_->add(acc, term);
  }
  return acc;
}

void DeepONetOnTape::cache_quadrature(const QuadratureRule& rule) {
  if (rule.nodes.empty()) fail_invalid("deeponet: empty quadrature rule");
  int acc = -1;
  for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
    const int term = tape_->scalar_mul(trunk(rule.nodes[m]), rule.weights[m]);
    acc = acc < 0 ? term : tape_->add(acc, term);
  }
  psi_bar_ = acc;
}

int DeepONetOnTape::hamiltonian_cached(int w) const {
  if (psi_bar_ < 0) fail_invalid("deeponet: cache_quadrature was not called");
  return tape_->dot(branch(w), psi_bar_);
}

std::vector<int> DeepONetOnTape::all_params() const {
  std::vector<int> ids;
  for (const MlpNodes* n : {&branch_nodes_, &trunk_nodes_}) {
    ids.insert(ids.end(), n->weights.begin(), n->weights.end());
    ids.insert(ids.end(), n->biases.begin(), n->biases.end());
  }
  return ids;
}

namespace {

int state_leaf(Tape& tape, std::span<const double> u, std::span<const double> ut, int& u_node,
               int& ut_node) {
  u_node = tape.leaf(Tensor::vector({u.begin(), u.end()}));
  ut_node = tape.leaf(Tensor::vector({ut.begin(), ut.end()}));
  return tape.concat(u_node, ut_node);
}

}  // namespace

double density_value(const DeepONetModel& model, std::span<const double> u,
                     std::span<const double> ut, double y) {
  Tape tape;
  DeepONetOnTape net(tape, model);
  int u_node, ut_node;
  const int w = state_leaf(tape, u, ut, u_node, ut_node);
  return tape.value(net.density(w, y)).scalar_value();
}

double hamiltonian_value(const DeepONetModel& model, std::span<const double> u,
                         std::span<const double> ut, const QuadratureRule& rule) {
  Tape tape;
  DeepONetOnTape net(tape, model);
  int u_node, ut_node;
  const int w = state_leaf(tape, u, ut, u_node, ut_node);
  return tape.value(net.hamiltonian(w, rule)).scalar_value();
}

std::pair<FieldVector, FieldVector> grad_hamiltonian(const DeepONetModel& model,
                                                     std::span<const double> u,
                                                     std::span<const double> ut,
                                                     const QuadratureRule& rule,
                                                     const GramMatrix& gram) {
  if (static_cast<int>(u.size()) != model.nx || static_cast<int>(ut.size()) != model.nx)
    fail_invalid("grad_hamiltonian: state length does not match the model grid");
  Tape tape;
  DeepONetOnTape net(tape, model);
  int u_node, ut_node;
  const int w = state_leaf(tape, u, ut, u_node, ut_node);
  const int ham = net.hamiltonian(w, rule);
  const int targets[] = {u_node, ut_node};
  std::vector<Tensor> adj = tape.backward(ham, targets);
  Tensor gu = std::move(adj[static_cast<std::size_t>(u_node)]);
  Tensor gut = std::move(adj[static_cast<std::size_t>(ut_node)]);
  if (gu.empty()) gu = Tensor::zeros({model.nx});
  if (gut.empty()) gut = Tensor::zeros({model.nx});
  return {variational_derivative(gu.view(), gram), variational_derivative(gut.view(), gram)};
}

// --- checkpoint io ----------------------------------------------------------

namespace {
constexpr char kCkptMagic[4] = {'H', 'W', 'C', 'K'};
constexpr std::uint32_t kCkptVersion = 1;

void write_mlp(BinWriter& w, const MlpParams& mlp) {
  w.u32(static_cast<std::uint32_t>(mlp.n_layers()));
  for (int l = 0; l < mlp.n_layers(); ++l) {
    w.i32(mlp.weights[static_cast<std::size_t>(l)].rows());
    w.i32(mlp.weights[static_cast<std::size_t>(l)].cols());
  }
  for (int l = 0; l < mlp.n_layers(); ++l) {
    w.f64_array(mlp.weights[static_cast<std::size_t>(l)].view());
    w.f64_array(mlp.biases[static_cast<std::size_t>(l)].view());
  }
}

MlpParams read_mlp(BinReader& r) {
  const std::uint32_t layers = r.u32();
  if (layers == 0 || layers > 64) fail_io("checkpoint: implausible layer count");
  std::vector<std::pair<int, int>> dims;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const int rows = r.i32();
    const int cols = r.i32();
    if (rows < 1 || cols < 1) fail_io("checkpoint: bad layer dimensions");
    dims.emplace_back(rows, cols);
  }
  MlpParams mlp;
  for (auto [rows, cols] : dims) {
    mlp.weights.push_back(
        Tensor::matrix(rows, cols, r.f64_vector(static_cast<std::size_t>(rows) * cols)));
    mlp.biases.push_back(Tensor::vector(r.f64_vector(static_cast<std::size_t>(rows))));
  }
  return mlp;
}

}  // namespace

void save_model(const DeepONetModel& model, const std::string& path) {
  model.validate();
  BinWriter w(path);
  w.magic(kCkptMagic);
  w.u32(kCkptVersion);
  w.i32(model.nx);
  w.i32(model.p);
  w.i32(model.hidden);
  w.i32(model.layers);
  w.u64(model.seed);
  w.f64(model.x_lo);
  w.f64(model.x_hi);
  w.u64(model.config_hash());
  write_mlp(w, model.branch);
  write_mlp(w, model.trunk);
  w.close();
}

DeepONetModel load_model(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kCkptMagic, "checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCkptVersion)
    fail_io(path + ": unsupported checkpoint version " + std::to_string(version));
  DeepONetModel m;
  m.nx = r.i32();
  m.p = r.i32();
  m.hidden = r.i32();
  m.layers = r.i32();
  m.seed = r.u64();
  m.x_lo = r.f64();
  m.x_hi = r.f64();
  const std::uint64_t stored_hash = r.u64();
  m.branch = read_mlp(r);
  m.trunk = read_mlp(r);
  m.validate();
  if (stored_hash != m.config_hash()) fail_io(path + ": checkpoint hash does not match its header");
  return m;
}

}  // namespace hamwave
