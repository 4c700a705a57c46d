// SPDX-License-Identifier: Apache-2.0
//
// Command line driver for the hamwave shared library: dataset generation,
// training, rollout evaluation with figures, and the built-in check suite.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hamwave.h"
#include "svg.hpp"

namespace {

// exit codes: 0 ok, 1 validation problem, 2 runtime/numeric failure
int exit_code_of(hw_status s) {
  switch (s) {
    case HW_OK: return 0;
    case HW_ERR_NUMERIC: return 2;
    default: return 1;
  }
}

int fail_with(hw_status s, const char* what) {
  std::fprintf(stderr, "error (%s): %s\n", what, hw_last_error());
  return exit_code_of(s);
}

struct DatasetHandle {
  hw_dataset* p = nullptr;
  ~DatasetHandle() { hw_dataset_free(p); }
};
struct ModelHandle {
  hw_model* p = nullptr;
  ~ModelHandle() { hw_model_free(p); }
};
struct RolloutHandle {
  hw_rollout* p = nullptr;
  ~RolloutHandle() { hw_rollout_free(p); }
};

// ---- generate --------------------------------------------------------------

struct GenerateArgs {
  hw_generate_config cfg;
  std::string out;
};

int run_generate(const GenerateArgs& args) {
  DatasetHandle ds;
  hw_status s = hw_dataset_generate(&args.cfg, &ds.p);
  if (s != HW_OK) return fail_with(s, "generate");
  s = hw_dataset_save(ds.p, args.out.c_str());
  if (s != HW_OK) return fail_with(s, "save dataset");

  double drift = 0.0;
  s = hw_dataset_energy_drift(ds.p, &drift);
  if (s != HW_OK) return fail_with(s, "energy check");

  std::printf("dataset: %s\n", args.out.c_str());
  std::printf("  trajectories: %d\n", hw_dataset_n_traj(ds.p));
  std::printf("  lattice: nx=%d, nt=%d, dt=%g, t_max=%g\n", hw_dataset_nx(ds.p),
              hw_dataset_nt(ds.p), hw_dataset_dt(ds.p), hw_dataset_t_max(ds.p));
  std::printf("  config hash: %llu\n",
              static_cast<unsigned long long>(hw_dataset_config_hash(ds.p)));
  std::printf("  max relative energy drift (analytic): %.3e\n", drift);
  return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  hw_train_config cfg;
  hw_model_config model_cfg;
  std::string data, out, log, resume;
  int progress_every = 200;
};

void progress_cb(int32_t epoch, double loss, void* user) {
  const auto* every = static_cast<const int*>(user);
  if (*every > 0 && epoch % *every == 0) std::printf("epoch %6d  loss %.6e\n", epoch, loss);
}

int run_train(TrainArgs& args) {
  DatasetHandle ds;
  hw_status s = hw_dataset_load(args.data.c_str(), &ds.p);
  if (s != HW_OK) return fail_with(s, "load dataset");

  ModelHandle model;
  if (!args.resume.empty()) {
    s = hw_model_load(args.resume.c_str(), &model.p);
    if (s != HW_OK) return fail_with(s, "load checkpoint");
    std::printf("resuming from %s\n", args.resume.c_str());
  } else {
    args.model_cfg.nx = hw_dataset_nx(ds.p);
    s = hw_model_create(&args.model_cfg, &model.p);
    if (s != HW_OK) return fail_with(s, "init model");
  }

  double first = 0.0, final = 0.0;
  s = hw_train(model.p, ds.p, &args.cfg, args.log.empty() ? nullptr : args.log.c_str(),
               args.out.c_str(), progress_cb, &args.progress_every, &first, &final);
  if (s != HW_OK) return fail_with(s, "train");

  std::printf("checkpoint: %s\n", args.out.c_str());
  std::printf("  config hash: %llu\n",
              static_cast<unsigned long long>(hw_model_config_hash(model.p)));
  std::printf("  monitor loss: %.6e -> %.6e (factor %.1f)\n", first, final,
              final > 0 ? first / final : 0.0);
  if (!args.log.empty()) std::printf("  log: %s\n", args.log.c_str());
  return 0;
}

// ---- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  hw_rollout_config cfg;
  std::string data, model, out_dir, source = "learned";
  double t_max = 0.5;
  bool steps_given = false;
};

int run_evaluate(EvaluateArgs& args) {
  DatasetHandle ds;
  hw_status s = hw_dataset_load(args.data.c_str(), &ds.p);
  if (s != HW_OK) return fail_with(s, "load dataset");

  ModelHandle model;
  if (args.source == "learned") {
    if (args.model.empty()) {
      std::fprintf(stderr, "error (evaluate): --model is required unless --source exact\n");
      return 1;
    }
    s = hw_model_load(args.model.c_str(), &model.p);
    if (s != HW_OK) return fail_with(s, "load checkpoint");
  }

  if (!args.steps_given)
    args.cfg.steps = static_cast<int32_t>(args.t_max / args.cfg.dt + 0.5);

  RolloutHandle roll;
  s = hw_rollout_run(model.p, ds.p, &args.cfg, &roll.p);
  if (s != HW_OK) return fail_with(s, "rollout");

  std::error_code ec;
  std::filesystem::create_directories(args.out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "error (evaluate): cannot create %s\n", args.out_dir.c_str());
    return 1;
  }
  const std::string csv = args.out_dir + "/rollout.csv";
  s = hw_rollout_write_csv(roll.p, csv.c_str());
  if (s != HW_OK) return fail_with(s, "write csv");

  const int rows = hw_rollout_rows(roll.p);
  const int nx = hw_rollout_nx(roll.p);
  std::vector<double> t(rows);
  hw_rollout_copy_series(roll.p, HW_SERIES_T, t.data());

  const std::string meta =
      "data_hash=" + std::to_string(hw_dataset_config_hash(ds.p)) +
      " model_hash=" + std::to_string(model.p ? hw_model_config_hash(model.p) : 0);

  // field panels
  std::vector<svgplot::Heatmap> panels(4);
  const char* titles[4] = {"true u", "learned u", "true u_t", "learned u_t"};
  const hw_field fields[4] = {HW_FIELD_TRUE_U, HW_FIELD_LEARNED_U, HW_FIELD_TRUE_UT,
                              HW_FIELD_LEARNED_UT};
  for (int p = 0; p < 4; ++p) {
    panels[static_cast<std::size_t>(p)].title = titles[p];
    panels[static_cast<std::size_t>(p)].rows = rows;
    panels[static_cast<std::size_t>(p)].cols = nx;
    panels[static_cast<std::size_t>(p)].values.resize(static_cast<std::size_t>(rows) * nx);
    for (int j = 0; j < rows; ++j)
      hw_rollout_copy_field(roll.p, fields[p], j,
                            panels[static_cast<std::size_t>(p)].values.data() +
                                static_cast<std::size_t>(j) * nx);
  }
  const std::string fields_svg = args.out_dir + "/fields.svg";
  if (!svgplot::write_heatmap_grid(fields_svg, panels, t.back(), meta)) {
    std::fprintf(stderr, "error (evaluate): cannot write %s\n", fields_svg.c_str());
    return 1;
  }

  // Hamiltonian series plot
  std::vector<double> h_on_true(rows), h_on_learned(rows);
  hw_rollout_copy_series(roll.p, HW_SERIES_H_LEARNED_ON_TRUE, h_on_true.data());
  hw_rollout_copy_series(roll.p, HW_SERIES_H_TRUE_ON_LEARNED, h_on_learned.data());
  // the learned H is reported relative to t=0; anchor it at the true initial
  // energy so the two curves share a scale
  for (double& v : h_on_true) v += h_on_learned.front();
  const std::string ham_svg = args.out_dir + "/hamiltonian.svg";
  if (!svgplot::write_line_plot(
          ham_svg, "Hamiltonian along the window", t,
          {{"H_NO on true states (shifted)", "red", h_on_true},
           {"exact H on learned states", "blue", h_on_learned}},
          meta)) {
    std::fprintf(stderr, "error (evaluate): cannot write %s\n", ham_svg.c_str());
    return 1;
  }

  std::vector<double> eu(rows), eut(rows);
  hw_rollout_copy_series(roll.p, HW_SERIES_L2_ERROR_U, eu.data());
  hw_rollout_copy_series(roll.p, HW_SERIES_L2_ERROR_UT, eut.data());
  double displacement = 0.0;
  {
    std::vector<double> w0(nx), wj(nx);
    hw_rollout_copy_field(roll.p, HW_FIELD_LEARNED_U, 0, w0.data());
    hw_rollout_copy_field(roll.p, HW_FIELD_LEARNED_U, rows - 1, wj.data());
    for (int i = 0; i < nx; ++i) displacement = std::max(displacement, std::abs(wj[i] - w0[i]));
  }

  std::printf("rollout: %s (%d rows)\n", csv.c_str(), rows);
  std::printf("  %s\n", meta.c_str());
  std::printf("  rel l2 error over window: %.4f\n", hw_rollout_rel_l2_error(roll.p));
  std::printf("  final l2 errors: u %.3e, u_t %.3e\n", eu.back(), eut.back());
  std::printf("  learned-field displacement (max |u(T)-u(0)|): %.3e\n", displacement);
  std::printf("  H drift on true states: %.3e\n",
              std::abs(h_on_true.back() - h_on_true.front()));
  std::printf("  figures: %s, %s\n", fields_svg.c_str(), ham_svg.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"operator learning of wave-equation Hamiltonian densities"};
  app.require_subcommand(1);
  app.set_version_flag("--version", hw_version());

  GenerateArgs gen;
  hw_generate_config_default(&gen.cfg);
  CLI::App* g = app.add_subcommand("generate", "sample initial conditions and write a dataset");
  g->add_option("--out", gen.out, "output dataset path")->required();
  g->add_option("--n-traj", gen.cfg.n_traj, "number of trajectories");
  g->add_option("--modes", gen.cfg.modes, "Fourier modes of the initial conditions");
  g->add_option("--amp", gen.cfg.amp, "amplitude scale (mode k drawn from [-amp/k, amp/k])");
  g->add_option("--nx", gen.cfg.nx, "spatial grid points");
  g->add_option("--nt", gen.cfg.nt, "time steps over [0, t_max]");
  g->add_option("--t-max", gen.cfg.t_max, "time horizon");
  g->add_option("--seed", gen.cfg.seed, "generator seed");
  g->set_config("--config");
  g->allow_config_extras(CLI::config_extras_mode::error);

  TrainArgs tr;
  hw_train_config_default(&tr.cfg);
  hw_model_config_default(&tr.model_cfg);
  CLI::App* t = app.add_subcommand("train", "fit the density operator to a dataset");
  t->add_option("--data", tr.data, "dataset path")->required();
  t->add_option("--out", tr.out, "checkpoint output path")->required();
  t->add_option("--log", tr.log, "CSV loss log path");
  t->add_option("--resume", tr.resume, "checkpoint to continue from");
  t->add_option("--p", tr.model_cfg.p, "branch/trunk combination width");
  t->add_option("--hidden", tr.model_cfg.hidden, "hidden units per layer");
  t->add_option("--layers", tr.model_cfg.layers, "weight layers per network");
  t->add_option("--model-seed", tr.model_cfg.seed, "initialization seed");
  t->add_option("--lr", tr.cfg.learning_rate, "Adam learning rate");
  t->add_option("--epochs", tr.cfg.epochs, "gradient steps");
  t->add_option("--batch", tr.cfg.batch_size, "batch size");
  t->add_option("--seed", tr.cfg.seed, "batch sampling seed");
  t->add_option("--checkpoint-every", tr.cfg.checkpoint_every,
                "write the checkpoint every k epochs (0 = end only)");
  t->add_option("--progress-every", tr.progress_every, "print progress every k epochs");
  t->add_option(
      "--loss",
      [&tr](const std::vector<std::string>& v) {
        if (v[0] == "dynamics")
          tr.cfg.loss_mode = HW_LOSS_DYNAMICS;
        else if (v[0] == "density")
          tr.cfg.loss_mode = HW_LOSS_DENSITY;
        else
          return false;
        return true;
      },
      "loss mode: dynamics | density");
  t->add_option(
      "--gram",
      [&tr](const std::vector<std::string>& v) {
        if (v[0] == "exact")
          tr.cfg.gram_mode = HW_GRAM_EXACT;
        else if (v[0] == "lumped")
          tr.cfg.gram_mode = HW_GRAM_LUMPED;
        else
          return false;
        return true;
      },
      "Gram matrix mode: exact | lumped");
  t->set_config("--config");
  t->allow_config_extras(CLI::config_extras_mode::error);

  EvaluateArgs ev;
  hw_rollout_config_default(&ev.cfg);
  CLI::App* e = app.add_subcommand("evaluate", "integrate the learned dynamics and emit figures");
  e->add_option("--data", ev.data, "dataset path")->required();
  e->add_option("--model", ev.model, "checkpoint path (omit with --source exact)");
  e->add_option("--out-dir", ev.out_dir, "output directory")->required();
  e->add_option("--traj", ev.cfg.traj, "dataset trajectory index");
  e->add_option("--dt", ev.cfg.dt, "integration step");
  CLI::Option* steps_opt = e->add_option("--steps", ev.cfg.steps, "integration steps");
  e->add_option("--t-max", ev.t_max, "time horizon (used when --steps is absent)");
  e->add_option("--source", ev.source, "Hamiltonian source: learned | exact")
      ->check(CLI::IsMember({"learned", "exact"}));
  e->add_option(
      "--method",
      [&ev](const std::vector<std::string>& v) {
        if (v[0] == "rk4")
          ev.cfg.method = HW_INTEGRATOR_RK4;
        else if (v[0] == "leapfrog")
          ev.cfg.method = HW_INTEGRATOR_LEAPFROG;
        else
          return false;
        return true;
      },
      "integrator: rk4 | leapfrog");
  e->add_option(
      "--gram",
      [&ev](const std::vector<std::string>& v) {
        if (v[0] == "exact")
          ev.cfg.gram_mode = HW_GRAM_EXACT;
        else if (v[0] == "lumped")
          ev.cfg.gram_mode = HW_GRAM_LUMPED;
        else
          return false;
        return true;
      },
      "Gram matrix mode: exact | lumped");
  e->set_config("--config");
  e->allow_config_extras(CLI::config_extras_mode::error);

  CLI::App* st = app.add_subcommand("selftest", "run the built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 1;  // bad flags and bad config files are validation errors
  }

  if (g->parsed()) return run_generate(gen);
  if (t->parsed()) return run_train(tr);
  if (e->parsed()) {
    ev.steps_given = steps_opt->count() > 0;
    return run_evaluate(ev);
  }
  if (st->parsed()) {
    const int failures = hw_selftest(1);
    std::printf("%d check(s) failed\n", failures);
    return failures == 0 ? 0 : 2;
  }
  return 1;
}
