// SPDX-License-Identifier: Apache-2.0
//
// extern "C" bridge: opaque handles over the C++ core, exceptions mapped to
// status codes with a thread-local message.
#include "hamwave.h"

#include <cstring>
#include <exception>
#include <string>

#include "hamwave/deeponet.hpp"
#include "hamwave/dynamics.hpp"
#include "hamwave/error.hpp"
#include "hamwave/selftest.hpp"
#include "hamwave/training.hpp"
#include "hamwave/wave_data.hpp"

using namespace hamwave;

namespace {

thread_local std::string g_last_error;

hw_status status_of(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::invalid_argument: return HW_ERR_INVALID;
    case ErrorKind::io: return HW_ERR_IO;
    case ErrorKind::numeric: return HW_ERR_NUMERIC;
    case ErrorKind::mismatch: return HW_ERR_MISMATCH;
  }
  return HW_ERR_INVALID;
}

template <typename Fn>
hw_status guarded(Fn&& fn) {
  try {
    fn();
    return HW_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HW_ERR_NUMERIC;
  } catch (...) {
    g_last_error = "unknown error";
    return HW_ERR_NUMERIC;
  }
}

hw_status invalid(const char* msg) {
  g_last_error = msg;
  return HW_ERR_INVALID;
}

}  // namespace

struct hw_dataset {
  Dataset ds;
};

struct hw_model {
  DeepONetModel model;
};

struct hw_rollout {
  RolloutReport report;
};

extern "C" {

const char* hw_last_error(void) { return g_last_error.c_str(); }

const char* hw_version(void) { return "hamwave 1.0.0"; }

// ---- datasets ---------------------------------------------------------

void hw_generate_config_default(hw_generate_config* cfg) {
  if (!cfg) return;
  cfg->n_traj = 100;
  cfg->modes = 3;
  cfg->nx = 64;
  cfg->nt = 100;
  cfg->t_max = 2.0;
  cfg->amp = 0.25;
  cfg->seed = 0;
}

hw_status hw_dataset_generate(const hw_generate_config* cfg, hw_dataset** out) {
  if (!cfg || !out) return invalid("hw_dataset_generate: null argument");
  return guarded([&] {
    DatasetConfig c;
    c.n_traj = cfg->n_traj;
    c.modes = cfg->modes;
    c.nx = cfg->nx;
    c.nt = cfg->nt;
    c.t_max = cfg->t_max;
    c.amp = cfg->amp;
    c.seed = cfg->seed;
    *out = new hw_dataset{generate_dataset(c)};
  });
}

hw_status hw_dataset_save(const hw_dataset* ds, const char* path) {
  if (!ds || !path) return invalid("hw_dataset_save: null argument");
  return guarded([&] { save_dataset(ds->ds, path); });
}

hw_status hw_dataset_load(const char* path, hw_dataset** out) {
  if (!path || !out) return invalid("hw_dataset_load: null argument");
  return guarded([&] { *out = new hw_dataset{load_dataset(path)}; });
}

void hw_dataset_free(hw_dataset* ds) { delete ds; }

int32_t hw_dataset_n_traj(const hw_dataset* ds) { return ds ? ds->ds.n_traj() : 0; }
int32_t hw_dataset_nx(const hw_dataset* ds) { return ds ? ds->ds.nx() : 0; }
int32_t hw_dataset_nt(const hw_dataset* ds) { return ds ? ds->ds.nt() : 0; }
double hw_dataset_dt(const hw_dataset* ds) { return ds ? ds->ds.dt() : 0.0; }
double hw_dataset_t_max(const hw_dataset* ds) { return ds ? ds->ds.config().t_max : 0.0; }
uint64_t hw_dataset_config_hash(const hw_dataset* ds) { return ds ? ds->ds.config_hash() : 0; }

hw_status hw_dataset_copy_state(const hw_dataset* ds, int32_t traj, int32_t j, double* u,
                                double* ut) {
  if (!ds || !u || !ut) return invalid("hw_dataset_copy_state: null argument");
  return guarded([&] {
    auto su = ds->ds.u_at(traj, j);
    auto st = ds->ds.ut_at(traj, j);
    std::memcpy(u, su.data(), su.size() * sizeof(double));
    std::memcpy(ut, st.data(), st.size() * sizeof(double));
  });
}

hw_status hw_dataset_energy_drift(const hw_dataset* ds, double* max_rel_drift) {
  if (!ds || !max_rel_drift) return invalid("hw_dataset_energy_drift: null argument");
  return guarded([&] { *max_rel_drift = max_energy_drift(ds->ds); });
}

// ---- models -----------------------------------------------------------

void hw_model_config_default(hw_model_config* cfg) {
  if (!cfg) return;
  cfg->nx = 64;
  cfg->p = 20;
  cfg->hidden = 64;
  cfg->layers = 3;
  cfg->seed = 0;
}

hw_status hw_model_create(const hw_model_config* cfg, hw_model** out) {
  if (!cfg || !out) return invalid("hw_model_create: null argument");
  return guarded([&] {
    *out = new hw_model{init_model(cfg->nx, cfg->p, cfg->hidden, cfg->layers, cfg->seed)};
  });
}

hw_status hw_model_save(const hw_model* m, const char* path) {
  if (!m || !path) return invalid("hw_model_save: null argument");
  return guarded([&] { save_model(m->model, path); });
}

hw_status hw_model_load(const char* path, hw_model** out) {
  if (!path || !out) return invalid("hw_model_load: null argument");
  return guarded([&] { *out = new hw_model{load_model(path)}; });
}

void hw_model_free(hw_model* m) { delete m; }

int32_t hw_model_nx(const hw_model* m) { return m ? m->model.nx : 0; }
uint64_t hw_model_config_hash(const hw_model* m) { return m ? m->model.config_hash() : 0; }

// ---- training -----------------------------------------------------------

void hw_train_config_default(hw_train_config* cfg) {
  if (!cfg) return;
  cfg->learning_rate = 1e-4;
  cfg->epochs = 2000;
  cfg->batch_size = 64;
  cfg->loss_mode = HW_LOSS_DYNAMICS;
  cfg->beta1 = 0.9;
  cfg->beta2 = 0.999;
  cfg->epsilon = 1e-8;
  cfg->seed = 0;
  cfg->checkpoint_every = 0;
  cfg->gram_mode = HW_GRAM_EXACT;
}

hw_status hw_train(hw_model* m, const hw_dataset* ds, const hw_train_config* cfg,
                   const char* log_csv_path, const char* checkpoint_path, hw_train_callback cb,
                   void* user, double* first_loss, double* final_loss) {
  if (!m || !ds || !cfg) return invalid("hw_train: null argument");
  return guarded([&] {
    TrainConfig c;
    c.learning_rate = cfg->learning_rate;
    c.epochs = cfg->epochs;
    c.batch_size = cfg->batch_size;
    if (cfg->loss_mode != HW_LOSS_DYNAMICS && cfg->loss_mode != HW_LOSS_DENSITY)
      fail_invalid("hw_train: unknown loss mode");
    c.loss_mode = cfg->loss_mode == HW_LOSS_DENSITY ? LossMode::density : LossMode::dynamics;
    c.beta1 = cfg->beta1;
    c.beta2 = cfg->beta2;
    c.epsilon = cfg->epsilon;
    c.seed = cfg->seed;
    c.checkpoint_every = cfg->checkpoint_every;
    if (cfg->gram_mode != HW_GRAM_EXACT && cfg->gram_mode != HW_GRAM_LUMPED)
      fail_invalid("hw_train: unknown gram mode");
    c.gram_mode = cfg->gram_mode == HW_GRAM_LUMPED ? GramMode::lumped : GramMode::exact;
    TrainCallback callback;
    if (cb) callback = [cb, user](int epoch, double loss) { cb(epoch, loss, user); };
    const TrainReport report = train(m->model, ds->ds, c, log_csv_path ? log_csv_path : "",
                                     checkpoint_path ? checkpoint_path : "", callback);
    if (first_loss) *first_loss = report.initial_loss();
    if (final_loss) *final_loss = report.final_loss;
  });
}

// ---- rollouts -----------------------------------------------------------

void hw_rollout_config_default(hw_rollout_config* cfg) {
  if (!cfg) return;
  cfg->traj = 0;
  cfg->steps = 200;
  cfg->method = HW_INTEGRATOR_RK4;
  cfg->dt = 0.01;
  cfg->gram_mode = HW_GRAM_EXACT;
}

hw_status hw_rollout_run(const hw_model* m, const hw_dataset* ds, const hw_rollout_config* cfg,
                         hw_rollout** out) {
  if (!ds || !cfg || !out) return invalid("hw_rollout_run: null argument");
  return guarded([&] {
    if (cfg->method != HW_INTEGRATOR_RK4 && cfg->method != HW_INTEGRATOR_LEAPFROG)
      fail_invalid("hw_rollout_run: unknown integrator");
    if (cfg->gram_mode != HW_GRAM_EXACT && cfg->gram_mode != HW_GRAM_LUMPED)
      fail_invalid("hw_rollout_run: unknown gram mode");
    const Integrator method =
        cfg->method == HW_INTEGRATOR_LEAPFROG ? Integrator::leapfrog : Integrator::rk4;
    const GramMode mode = cfg->gram_mode == HW_GRAM_LUMPED ? GramMode::lumped : GramMode::exact;
    *out = new hw_rollout{evaluate_rollout(ds->ds, cfg->traj, m ? &m->model : nullptr, cfg->dt,
                                           cfg->steps, method, mode)};
  });
}

void hw_rollout_free(hw_rollout* r) { delete r; }

int32_t hw_rollout_rows(const hw_rollout* r) { return r ? r->report.rows() : 0; }

int32_t hw_rollout_nx(const hw_rollout* r) {
  if (!r || r->report.learned.empty()) return 0;
  return static_cast<int32_t>(r->report.learned.front().u.size());
}

double hw_rollout_rel_l2_error(const hw_rollout* r) { return r ? r->report.rel_l2_error : 0.0; }

hw_status hw_rollout_write_csv(const hw_rollout* r, const char* path) {
  if (!r || !path) return invalid("hw_rollout_write_csv: null argument");
  return guarded([&] { write_rollout_csv(r->report, path); });
}

hw_status hw_rollout_copy_series(const hw_rollout* r, int32_t series, double* out) {
  if (!r || !out) return invalid("hw_rollout_copy_series: null argument");
  return guarded([&] {
    const RolloutReport& rep = r->report;
    const std::vector<double>* src = nullptr;
    switch (series) {
      case HW_SERIES_T: src = &rep.t; break;
      case HW_SERIES_L2_ERROR_U: src = &rep.err_u; break;
      case HW_SERIES_L2_ERROR_UT: src = &rep.err_ut; break;
      case HW_SERIES_H_LEARNED_ON_TRUE: src = &rep.h_on_true; break;
      case HW_SERIES_H_TRUE_ON_LEARNED: src = &rep.h_exact_on_learned; break;
      default: fail_invalid("hw_rollout_copy_series: unknown series");
    }
    std::memcpy(out, src->data(), src->size() * sizeof(double));
  });
}

hw_status hw_rollout_copy_field(const hw_rollout* r, int32_t field, int32_t j, double* out) {
  if (!r || !out) return invalid("hw_rollout_copy_field: null argument");
  return guarded([&] {
    const RolloutReport& rep = r->report;
    if (j < 0 || j >= rep.rows()) fail_invalid("hw_rollout_copy_field: row out of range");
    const State& state = (field == HW_FIELD_TRUE_U || field == HW_FIELD_TRUE_UT)
                             ? rep.truth[static_cast<std::size_t>(j)]
                             : rep.learned[static_cast<std::size_t>(j)];
    const FieldVector* src = nullptr;
    switch (field) {
      case HW_FIELD_LEARNED_U:
      case HW_FIELD_TRUE_U: src = &state.u; break;
      case HW_FIELD_LEARNED_UT:
      case HW_FIELD_TRUE_UT: src = &state.ut; break;
      default: fail_invalid("hw_rollout_copy_field: unknown field");
    }
    std::memcpy(out, src->data(), src->size() * sizeof(double));
  });
}

// ---- built-in checks ----------------------------------------------------

int32_t hw_selftest(int32_t verbose) { return selftest(verbose != 0); }

}  // extern "C"
