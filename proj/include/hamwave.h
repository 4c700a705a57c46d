/* SPDX-License-Identifier: Apache-2.0
 *
 * C interface of the hamwave shared library.
 *
 * All functions return hw_status (HW_OK on success); hw_last_error() gives a
 * thread-local message for the most recent failure on the calling thread.
 * Objects are opaque handles created and destroyed through this interface.
 */
#ifndef HAMWAVE_H
#define HAMWAVE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hw_status {
  HW_OK = 0,
  HW_ERR_INVALID = 1,  /* bad argument, size, range, or config value */
  HW_ERR_IO = 2,       /* file read/write/parse failure */
  HW_ERR_NUMERIC = 3,  /* non-finite values or diverged computation */
  HW_ERR_MISMATCH = 4, /* incompatible artifacts (e.g. checkpoint vs dataset grid) */
} hw_status;

const char* hw_last_error(void);
const char* hw_version(void);

/* ---- datasets -------------------------------------------------------- */

typedef struct hw_dataset hw_dataset;

typedef struct hw_generate_config {
  int32_t n_traj;
  int32_t modes;  /* Fourier modes of the sampled initial conditions */
  int32_t nx;     /* spatial grid points on [0, 1) */
  int32_t nt;     /* time steps on [0, t_max] (nt + 1 samples) */
  double t_max;
  double amp;     /* amplitude scale; mode k is drawn from [-amp/k, amp/k] */
  uint64_t seed;
} hw_generate_config;

void hw_generate_config_default(hw_generate_config* cfg);

hw_status hw_dataset_generate(const hw_generate_config* cfg, hw_dataset** out);
hw_status hw_dataset_save(const hw_dataset* ds, const char* path);
hw_status hw_dataset_load(const char* path, hw_dataset** out);
void hw_dataset_free(hw_dataset* ds);

int32_t hw_dataset_n_traj(const hw_dataset* ds);
int32_t hw_dataset_nx(const hw_dataset* ds);
int32_t hw_dataset_nt(const hw_dataset* ds);
double hw_dataset_dt(const hw_dataset* ds);
double hw_dataset_t_max(const hw_dataset* ds);
uint64_t hw_dataset_config_hash(const hw_dataset* ds);

/* Copies the state of trajectory `traj` at time index `j` into u[nx], ut[nx]. */
hw_status hw_dataset_copy_state(const hw_dataset* ds, int32_t traj, int32_t j, double* u,
                                double* ut);
/* Largest relative drift of the analytic energy across the dataset. */
hw_status hw_dataset_energy_drift(const hw_dataset* ds, double* max_rel_drift);

/* ---- models ---------------------------------------------------------- */

typedef struct hw_model hw_model;

typedef struct hw_model_config {
  int32_t nx;     /* must match the dataset grid */
  int32_t p;      /* branch/trunk combination width */
  int32_t hidden; /* hidden units per layer */
  int32_t layers; /* weight layers per network */
  uint64_t seed;
} hw_model_config;

void hw_model_config_default(hw_model_config* cfg);

hw_status hw_model_create(const hw_model_config* cfg, hw_model** out);
hw_status hw_model_save(const hw_model* m, const char* path);
hw_status hw_model_load(const char* path, hw_model** out);
void hw_model_free(hw_model* m);

int32_t hw_model_nx(const hw_model* m);
uint64_t hw_model_config_hash(const hw_model* m);

/* ---- training -------------------------------------------------------- */

typedef enum hw_loss_mode {
  HW_LOSS_DYNAMICS = 0, /* residual of Hamilton's equations */
  HW_LOSS_DENSITY = 1,  /* supervised density regression */
} hw_loss_mode;

typedef enum hw_gram_mode {
  HW_GRAM_EXACT = 0,
  HW_GRAM_LUMPED = 1, /* h * identity, kept for ablation */
} hw_gram_mode;

typedef struct hw_train_config {
  double learning_rate;
  int32_t epochs; /* gradient steps */
  int32_t batch_size;
  int32_t loss_mode; /* hw_loss_mode */
  double beta1, beta2, epsilon;
  uint64_t seed;
  int32_t checkpoint_every; /* 0 = only at the end */
  int32_t gram_mode;        /* hw_gram_mode */
} hw_train_config;

void hw_train_config_default(hw_train_config* cfg);

typedef void (*hw_train_callback)(int32_t epoch, double loss, void* user);

/* Trains in place. Optional: CSV log path, checkpoint path, progress callback.
 * first_loss/final_loss (either may be NULL) receive the monitor loss before
 * and after training. */
hw_status hw_train(hw_model* m, const hw_dataset* ds, const hw_train_config* cfg,
                   const char* log_csv_path, const char* checkpoint_path, hw_train_callback cb,
                   void* user, double* first_loss, double* final_loss);

/* ---- rollouts -------------------------------------------------------- */

typedef struct hw_rollout hw_rollout;

typedef enum hw_integrator {
  HW_INTEGRATOR_RK4 = 0,
  HW_INTEGRATOR_LEAPFROG = 1,
} hw_integrator;

typedef struct hw_rollout_config {
  int32_t traj;   /* dataset trajectory supplying w(0) and the reference */
  int32_t steps;
  int32_t method; /* hw_integrator */
  double dt;
  int32_t gram_mode;
} hw_rollout_config;

void hw_rollout_config_default(hw_rollout_config* cfg);

/* model may be NULL: then the exact Hamiltonian is integrated through the
 * same pipeline (useful as a discretization baseline). */
hw_status hw_rollout_run(const hw_model* m, const hw_dataset* ds, const hw_rollout_config* cfg,
                         hw_rollout** out);
void hw_rollout_free(hw_rollout* r);

int32_t hw_rollout_rows(const hw_rollout* r); /* steps + 1 */
int32_t hw_rollout_nx(const hw_rollout* r);
double hw_rollout_rel_l2_error(const hw_rollout* r);
hw_status hw_rollout_write_csv(const hw_rollout* r, const char* path);

typedef enum hw_series {
  HW_SERIES_T = 0,
  HW_SERIES_L2_ERROR_U = 1,
  HW_SERIES_L2_ERROR_UT = 2,
  HW_SERIES_H_LEARNED_ON_TRUE = 3, /* relative to its value at t = 0 */
  HW_SERIES_H_TRUE_ON_LEARNED = 4,
} hw_series;

hw_status hw_rollout_copy_series(const hw_rollout* r, int32_t series, double* out);

typedef enum hw_field {
  HW_FIELD_LEARNED_U = 0,
  HW_FIELD_LEARNED_UT = 1,
  HW_FIELD_TRUE_U = 2,
  HW_FIELD_TRUE_UT = 3,
} hw_field;

/* Copies row j (time index) of the requested field into out[nx]. */
hw_status hw_rollout_copy_field(const hw_rollout* r, int32_t field, int32_t j, double* out);

/* ---- built-in checks -------------------------------------------------- */

/* Runs the oracle suites (gradient checks, Gram checks, Riesz consistency).
 * Prints one line per check when verbose != 0; returns the number of failed
 * checks. */
int32_t hw_selftest(int32_t verbose);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* HAMWAVE_H */
