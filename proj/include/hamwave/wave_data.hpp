// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hamwave {

/// Truncated Fourier series f(x) = sum_k a_k sin(2 pi k x) + b_k cos(2 pi k x),
/// period 1. Exactly periodic, so the d'Alembert formula is globally valid.
struct InitialCondition {
  std::vector<double> sin_coef;  // a_k, k = 1..K
  std::vector<double> cos_coef;  // b_k

  int modes() const { return static_cast<int>(sin_coef.size()); }
  double value(double x) const;
  double deriv(double x) const;
  double deriv2(double x) const;
};

/// Coefficients drawn uniformly from [-amp/k, amp/k]; the 1/k decay keeps the
/// samples smooth.
InitialCondition sample_initial(std::uint64_t seed, int modes, double amp);

struct WavePoint {
  double u, ut;
};

/// Exact solution u(t,x) = (f(x+t) + f(x-t)) / 2 with u_t from the analytic
/// derivative of f; valid for all t because f is periodic.
WavePoint dalembert(const InitialCondition& f, double t, double x);

/// Analytic spatial derivative u_x(t,x).
double dalembert_ux(const InitialCondition& f, double t, double x);

/// Analytic u_tt(t,x) (= u_xx for the wave equation).
double dalembert_utt(const InitialCondition& f, double t, double x);

struct DatasetConfig {
  int n_traj = 100;
  int modes = 3;
  int nx = 64;
  int nt = 100;
  double t_max = 2.0;
  double amp = 0.25;
  std::uint64_t seed = 0;

  std::uint64_t hash() const;
  void validate() const;
};

/// Fields of one initial condition sampled on the (nt+1) x nx lattice,
/// row-major in time.
struct Trajectory {
  InitialCondition f;
  std::vector<double> u;
  std::vector<double> ut;
};

class Dataset {
public:
  Dataset() = default;
  Dataset(DatasetConfig cfg, std::vector<Trajectory> traj);

  const DatasetConfig& config() const { return cfg_; }
  int n_traj() const { return static_cast<int>(traj_.size()); }
  int nx() const { return cfg_.nx; }
  int nt() const { return cfg_.nt; }
  double dt() const { return cfg_.t_max / cfg_.nt; }
  double h() const { return (x_hi_ - x_lo_) / cfg_.nx; }
  double x_lo() const { return x_lo_; }
  double x_hi() const { return x_hi_; }
  double time(int j) const { return dt() * j; }
  std::uint64_t config_hash() const { return cfg_.hash(); }

  const Trajectory& trajectory(int i) const;
  std::span<const double> u_at(int i, int j) const;
  std::span<const double> ut_at(int i, int j) const;

private:
  DatasetConfig cfg_;
  double x_lo_ = 0.0, x_hi_ = 1.0;
  std::vector<Trajectory> traj_;
};

/// Evaluates the d'Alembert solution on the full lattice for every sampled
/// initial condition. No time stepping is involved.
Dataset generate_dataset(const DatasetConfig& cfg);

/// Energy int (u_x^2 + u_t^2)/2 dx at time t, from the analytic derivatives,
/// integrated by the periodic trapezoid rule (exact once n_quad > 2*modes).
double analytic_energy(const InitialCondition& f, double t, int n_quad);

/// Largest relative drift of the analytic energy over the dataset lattice.
double max_energy_drift(const Dataset& ds);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace hamwave
