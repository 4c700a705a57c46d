// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hamwave/basis.hpp"
#include "hamwave/deeponet.hpp"
#include "hamwave/functional.hpp"
#include "hamwave/wave_data.hpp"

namespace hamwave {

enum class LossMode {
  dynamics,  ///< residual of Hamilton's equations against measured rates
  density,   ///< supervised density regression (needs ground-truth densities)
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 2000;
  int batch_size = 64;
  LossMode loss_mode = LossMode::dynamics;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  ///< 0 = write the checkpoint only at the end
  GramMode gram_mode = GramMode::exact;

  void validate() const;
};

struct TrainReport {
  /// Monitor loss before each update (a fixed batch drawn once from the seed,
  /// so the series is comparable across epochs and constant when lr = 0).
  std::vector<double> losses;
  double final_loss = 0.0;  ///< monitor loss after the last update
  double wall_ms = 0.0;

  double initial_loss() const { return losses.empty() ? final_loss : losses.front(); }
};

using TrainCallback = std::function<void(int epoch, double loss)>;

/// Rates (du/dt, du_t/dt) at time index j from the stored lattice: central
/// differences in the interior, one-sided second-order at the ends.
std::pair<FieldVector, FieldVector> time_derivatives(const Dataset& ds, int traj, int j);

/// One training sample: the state and its measured time derivative.
struct DynamicsSample {
  std::span<const double> u, ut;
  FieldVector du, dut;
};

/// Mean over the batch of
///   || du/dt - dH/du_t ||^2  +  || du_t/dt + dH/du ||^2
/// in the h-scaled discrete norm, recorded on the tape (the variational
/// derivatives come from an on-tape reverse pass plus Gram solves, so the
/// loss stays differentiable with respect to the network parameters).
int dynamics_loss_node(Tape& tape, const StateFunctional& hamiltonian,
                       std::shared_ptr<const GramMatrix> gram,
                       std::span<const DynamicsSample> batch);

/// Mean squared density error over states and collocation points; `targets`
/// is row-major batch x nodes.
int density_loss_node(Tape& tape, DeepONetOnTape& net, std::span<const DynamicsSample> batch,
                      std::span<const double> ys, std::span<const double> targets);

/// Adam on all branch and trunk parameters. Deterministic for a fixed
/// (config, seed, dataset); aborts with a numeric error on non-finite loss.
TrainReport train(DeepONetModel& model, const Dataset& ds, const TrainConfig& cfg,
                  const std::string& log_csv_path = {}, const std::string& checkpoint_path = {},
                  const TrainCallback& callback = {});

}  // namespace hamwave
