// SPDX-License-Identifier: Apache-2.0
#include "hamwave/wave_data.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "hamwave/binio.hpp"
#include "hamwave/error.hpp"
#include "hamwave/hash.hpp"
#include "hamwave/rng.hpp"

namespace hamwave {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double InitialCondition::value(double x) const {
  double s = 0.0;
  for (int k = 1; k <= modes(); ++k) {
    const double w = kTwoPi * k * x;
    s += sin_coef[static_cast<std::size_t>(k - 1)] * std::sin(w) +
         cos_coef[static_cast<std::size_t>(k - 1)] * std::cos(w);
  }
  return s;
}

double InitialCondition::deriv(double x) const {
  double s = 0.0;
  for (int k = 1; k <= modes(); ++k) {
    const double w = kTwoPi * k * x;
    s += kTwoPi * k *
         (sin_coef[static_cast<std::size_t>(k - 1)] * std::cos(w) -
          cos_coef[static_cast<std::size_t>(k - 1)] * std::sin(w));
  }
  return s;
}

double InitialCondition::deriv2(double x) const {
  double s = 0.0;
  for (int k = 1; k <= modes(); ++k) {
    const double w = kTwoPi * k * x;
    const double f = kTwoPi * k;
    s -= f * f *
         (sin_coef[static_cast<std::size_t>(k - 1)] * std::sin(w) +
          cos_coef[static_cast<std::size_t>(k - 1)] * std::cos(w));
  }
  return s;
}

InitialCondition sample_initial(std::uint64_t seed, int modes, double amp) {
  if (modes < 1) fail_invalid("wave_data: need at least one Fourier mode");
  if (!(amp >= 0.0)) fail_invalid("wave_data: amplitude must be non-negative");
  Rng rng(seed);
  InitialCondition f;
  f.sin_coef.resize(static_cast<std::size_t>(modes));
  f.cos_coef.resize(static_cast<std::size_t>(modes));
  for (int k = 1; k <= modes; ++k) {
    const double bound = amp / k;
    f.sin_coef[static_cast<std::size_t>(k - 1)] = rng.uniform(-bound, bound);
    f.cos_coef[static_cast<std::size_t>(k - 1)] = rng.uniform(-bound, bound);
  }
  return f;
}

WavePoint dalembert(const InitialCondition& f, double t, double x) {
  WavePoint w;
  w.u = 0.5 * (f.value(x + t) + f.value(x - t));
  w.ut = 0.5 * (f.deriv(x + t) - f.deriv(x - t));
  return w;
}

double dalembert_ux(const InitialCondition& f, double t, double x) {
  return 0.5 * (f.deriv(x + t) + f.deriv(x - t));
}

double dalembert_utt(const InitialCondition& f, double t, double x) {
  return 0.5 * (f.deriv2(x + t) + f.deriv2(x - t));
}

std::uint64_t DatasetConfig::hash() const {
  ConfigHasher h;
  h.add("kind", std::string("wave_dataset"));
  h.add("n_traj", std::int64_t{n_traj});
  h.add("modes", std::int64_t{modes});
  h.add("nx", std::int64_t{nx});
  h.add("nt", std::int64_t{nt});
  h.add("t_max", t_max);
  h.add("amp", amp);
  h.add("seed", seed);
  return h.hash();
}

void DatasetConfig::validate() const {
  if (n_traj < 1) fail_invalid("dataset: n_traj must be >= 1");
  if (modes < 1) fail_invalid("dataset: modes must be >= 1");
  if (nx < 3) fail_invalid("dataset: nx must be >= 3");
  if (nt < 2) fail_invalid("dataset: nt must be >= 2");
  if (!(t_max > 0.0)) fail_invalid("dataset: t_max must be positive");
  if (!(amp >= 0.0)) fail_invalid("dataset: amp must be non-negative");
}

Dataset::Dataset(DatasetConfig cfg, std::vector<Trajectory> traj)
    : cfg_(cfg), traj_(std::move(traj)) {
  cfg_.validate();
  const std::size_t lattice = static_cast<std::size_t>(cfg_.nt + 1) * cfg_.nx;
  if (static_cast<int>(traj_.size()) != cfg_.n_traj) fail_invalid("dataset: trajectory count mismatch");
  for (const Trajectory& tr : traj_)
    if (tr.u.size() != lattice || tr.ut.size() != lattice ||
        tr.f.modes() != cfg_.modes)
      fail_invalid("dataset: trajectory lattice mismatch");
}

const Trajectory& Dataset::trajectory(int i) const {
  if (i < 0 || i >= n_traj()) fail_invalid("dataset: trajectory index out of range");
  return traj_[static_cast<std::size_t>(i)];
}

std::span<const double> Dataset::u_at(int i, int j) const {
  if (j < 0 || j > cfg_.nt) fail_invalid("dataset: time index out of range");
  const Trajectory& tr = trajectory(i);
  return {tr.u.data() + static_cast<std::size_t>(j) * cfg_.nx, static_cast<std::size_t>(cfg_.nx)};
}

std::span<const double> Dataset::ut_at(int i, int j) const {
  if (j < 0 || j > cfg_.nt) fail_invalid("dataset: time index out of range");
  const Trajectory& tr = trajectory(i);
  return {tr.ut.data() + static_cast<std::size_t>(j) * cfg_.nx, static_cast<std::size_t>(cfg_.nx)};
}

Dataset generate_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  const double dt = cfg.t_max / cfg.nt;
  const double h = 1.0 / cfg.nx;
  std::vector<Trajectory> trajectories;
  trajectories.reserve(static_cast<std::size_t>(cfg.n_traj));
  Rng seeder(cfg.seed);
  for (int i = 0; i < cfg.n_traj; ++i) {
    Trajectory tr;
    tr.f = sample_initial(seeder.raw(), cfg.modes, cfg.amp);
    const std::size_t lattice = static_cast<std::size_t>(cfg.nt + 1) * cfg.nx;
    tr.u.resize(lattice);
    tr.ut.resize(lattice);
    for (int j = 0; j <= cfg.nt; ++j) {
      const double t = dt * j;
      for (int m = 0; m < cfg.nx; ++m) {
        const WavePoint w = dalembert(tr.f, t, h * m);
        tr.u[static_cast<std::size_t>(j) * cfg.nx + m] = w.u;
        tr.ut[static_cast<std::size_t>(j) * cfg.nx + m] = w.ut;
      }
    }
    trajectories.push_back(std::move(tr));
  }
  return Dataset(cfg, std::move(trajectories));
}

double analytic_energy(const InitialCondition& f, double t, int n_quad) {
  if (n_quad < 2) fail_invalid("wave_data: need at least two quadrature points");
  const double h = 1.0 / n_quad;
  double s = 0.0;
  for (int m = 0; m < n_quad; ++m) {
    const double x = h * m;
    const double ux = dalembert_ux(f, t, x);
    const double ut = dalembert(f, t, x).ut;
    s += 0.5 * (ux * ux + ut * ut);
  }
  return s * h;
}

double max_energy_drift(const Dataset& ds) {
  // enough quadrature points to integrate the squared derivatives exactly
  const int n_quad = std::max(ds.nx(), 2 * ds.config().modes + 2);
  double worst = 0.0;
  for (int i = 0; i < ds.n_traj(); ++i) {
    const InitialCondition& f = ds.trajectory(i).f;
    const double e0 = analytic_energy(f, 0.0, n_quad);
    if (e0 == 0.0) continue;
    for (int j = 1; j <= ds.nt(); ++j) {
      const double e = analytic_energy(f, ds.time(j), n_quad);
      worst = std::max(worst, std::abs(e - e0) / std::abs(e0));
    }
  }
  return worst;
}

// --- dataset io --------------------------------------------------------------

namespace {
constexpr char kDataMagic[4] = {'H', 'W', 'D', 'S'};
constexpr std::uint32_t kDataVersion = 1;
}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  const DatasetConfig& cfg = ds.config();
  BinWriter w(path);
  w.magic(kDataMagic);
  w.u32(kDataVersion);
  w.i32(cfg.n_traj);
  w.i32(cfg.modes);
  w.i32(cfg.nx);
  w.i32(cfg.nt);
  w.f64(cfg.t_max);
  w.f64(cfg.amp);
  w.f64(ds.dt());
  w.f64(ds.h());
  w.f64(ds.x_lo());
  w.f64(ds.x_hi());
  w.u64(cfg.seed);
  w.u64(ds.config_hash());
  for (int i = 0; i < ds.n_traj(); ++i) {
    const InitialCondition& f = ds.trajectory(i).f;
    w.f64_array(f.sin_coef);
    w.f64_array(f.cos_coef);
  }
  for (int i = 0; i < ds.n_traj(); ++i) {
    w.f64_array(ds.trajectory(i).u);
    w.f64_array(ds.trajectory(i).ut);
  }
  w.close();
}

Dataset load_dataset(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kDataMagic, "dataset");
  const std::uint32_t version = r.u32();
  if (version != kDataVersion)
    fail_io(path + ": unsupported dataset version " + std::to_string(version));
  DatasetConfig cfg;
  cfg.n_traj = r.i32();
  cfg.modes = r.i32();
  cfg.nx = r.i32();
  cfg.nt = r.i32();
  cfg.t_max = r.f64();
  cfg.amp = r.f64();
  const double dt = r.f64();
  const double h = r.f64();
  const double x_lo = r.f64();
  const double x_hi = r.f64();
  cfg.seed = r.u64();
  const std::uint64_t stored_hash = r.u64();
  cfg.validate();
  if (x_lo != 0.0 || x_hi != 1.0) fail_io(path + ": unexpected spatial domain");
  if (std::abs(dt - cfg.t_max / cfg.nt) > 1e-15 || std::abs(h - 1.0 / cfg.nx) > 1e-15)
    fail_io(path + ": inconsistent lattice header");
  if (stored_hash != cfg.hash()) fail_io(path + ": dataset hash does not match its header");

  const std::size_t lattice = static_cast<std::size_t>(cfg.nt + 1) * cfg.nx;
  std::vector<Trajectory> trajectories(static_cast<std::size_t>(cfg.n_traj));
  for (Trajectory& tr : trajectories) {
    tr.f.sin_coef = r.f64_vector(static_cast<std::size_t>(cfg.modes));
    tr.f.cos_coef = r.f64_vector(static_cast<std::size_t>(cfg.modes));
  }
  for (Trajectory& tr : trajectories) {
    tr.u = r.f64_vector(lattice);
    tr.ut = r.f64_vector(lattice);
  }
  return Dataset(cfg, std::move(trajectories));
}

}  // namespace hamwave
