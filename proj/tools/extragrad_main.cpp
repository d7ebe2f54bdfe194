#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "extragrad/harness.hpp"

namespace {

using extragrad::DivergenceDemoParams;
using extragrad::ExperimentConfig;
using extragrad::ExperimentResult;

void add_experiment_options(CLI::App* cmd, ExperimentConfig& config) {
  cmd->add_option("--preset", config.preset, "Problem preset (see `presets`)")
      ->capture_default_str();
  cmd->add_option("--algorithm", config.algorithm, "sgda|seg|tseg (default: preset choice)");
  cmd->add_option("--eta0", config.eta0, "Step-size scale; 0 uses the preset default");
  cmd->add_option("--exponent-a", config.exponent_a,
                  "Step-size decay exponent in (1/2, 1); 0 uses the preset default");
  cmd->add_option("--trunc-radius0", config.trunc_radius0, "Radius of the first truncation set")
      ->capture_default_str();
  cmd->add_option("--trunc-growth", config.trunc_growth, "Radius increment per truncation")
      ->capture_default_str();
  cmd->add_option("--trunc-epsilon", config.trunc_epsilon,
                  "Threshold exponent parameter; 0 pairs it with the schedule");
  cmd->add_option("--trunc-d-const", config.trunc_d_const,
                  "Threshold scale; 0 pairs it with the schedule (d_k = k^-1/2)");
  cmd->add_option("--steps", config.n_steps, "Iterations per replication")->capture_default_str();
  cmd->add_option("--replications", config.n_replications, "Number of seeded replications")
      ->capture_default_str();
  cmd->add_option("--seed", config.base_seed, "Base seed; replication r derives stream (seed, r)")
      ->capture_default_str();
  cmd->add_option("--trace-every", config.trace_every,
                  "Record traces of replication 0 every N steps (0 = off)")
      ->capture_default_str();
  cmd->add_option("--checkpoints", config.checkpoints,
                  "Steps at which the averaged iterate is snapshotted")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--out", config.output_dir, "Output directory (empty = no files)");
  cmd->add_option("--emit", config.emit, "Any of csv,json,svg")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--threads", config.threads, "Worker threads (0 = hardware)");
  cmd->add_flag("--restart-average-on-truncation", config.restart_average_on_truncation,
                "Restart the iterate average after each truncation");
  cmd->add_option("--sigma-samples", config.sigma_samples,
                  "Stream length for the long-run noise covariance")
      ->capture_default_str();
  cmd->add_option("--sigma-batches", config.sigma_batches, "Batches for the long-run covariance")
      ->capture_default_str();
  cmd->add_option("--iid-sigma-samples", config.iid_sigma_samples,
                  "Draws for the i.i.d. noise covariance")
      ->capture_default_str();
}

void print_result(const ExperimentResult& result) {
  std::printf("preset=%s algorithm=%s eta0=%g exponent_a=%g steps=%ld replications=%d\n",
              result.config.preset.c_str(), result.algorithm.c_str(), result.schedule.eta0,
              result.schedule.exponent_a, result.config.n_steps, result.config.n_replications);
  std::printf("replications ok=%d failed=%d\n",
              result.config.n_replications - result.n_failed, result.n_failed);
  std::printf("sigma_projection=%.6f ks_critical_1pct=%.6f\n", result.sigma_projection,
              result.ks_critical);
  for (const auto& [step, stat] : result.ks) {
    std::printf("ks[%ld]=%.6f %s\n", step, stat, stat < result.ks_critical ? "pass" : "FAIL");
  }
  std::printf("covariance frobenius_rel_error=%.6f\n", result.covariance.frobenius_rel_error);
  for (const auto& f : result.emitted_files) std::printf("wrote %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic extra-gradient methods for saddle-point problems, with "
               "replication experiments and asymptotic-normality diagnostics"};
  app.set_config("--config", "", "Read options from a TOML/INI config file");
  app.fallthrough();  // lets --config appear after the subcommand
  app.require_subcommand(1);

  ExperimentConfig run_config;
  CLI::App* cmd_run = app.add_subcommand("run", "Run one replication experiment and emit files");
  add_experiment_options(cmd_run, run_config);

  ExperimentConfig clt_config;
  CLI::App* cmd_clt = app.add_subcommand(
      "clt-check", "Test the averaged iterates' limit distribution at the 1% KS level");
  add_experiment_options(cmd_clt, clt_config);

  DivergenceDemoParams demo;
  CLI::App* cmd_demo = app.add_subcommand(
      "divergence-demo",
      "Side-by-side SGDA (constant step) vs SEG (decaying) on the decision-dependent scalar game");
  cmd_demo->add_option("--eta", demo.eta, "Constant SGDA step in (0, 1)")->capture_default_str();
  cmd_demo->add_option("--steps", demo.n_steps, "Iterations")->capture_default_str();
  cmd_demo->add_option("--replications", demo.n_replications, "Replications")
      ->capture_default_str();
  cmd_demo->add_option("--seed", demo.seed, "Base seed")->capture_default_str();
  cmd_demo->add_option("--seg-eta0", demo.seg_eta0, "SEG schedule scale")->capture_default_str();
  cmd_demo->add_option("--seg-a", demo.seg_exponent, "SEG decay exponent in (1/2, 1)")
      ->capture_default_str();
  cmd_demo->add_option("--threads", demo.threads, "Worker threads (0 = hardware)");
  cmd_demo->add_option("--out", demo.output_dir, "Output directory");
  cmd_demo->add_option("--emit", demo.emit, "Any of csv,json")->delimiter(',');

  CLI::App* cmd_presets = app.add_subcommand("presets", "List built-in problem presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (cmd_run->parsed()) {
      print_result(extragrad::run_experiment(run_config));
      return 0;
    }
    if (cmd_clt->parsed()) {
      const ExperimentResult result = extragrad::clt_check(clt_config);
      print_result(result);
      std::printf("verdict: %s\n", result.stats_pass ? "pass" : "FAIL");
      return result.stats_pass ? 0 : 2;
    }
    if (cmd_demo->parsed()) {
      const extragrad::DivergenceTable table = extragrad::divergence_demo(demo);
      std::printf("one_step_prediction=%.6f observed=%.6f (se=%.6f)\n", table.one_step_prediction,
                  table.sgda_step1_mean, table.sgda_step1_se);
      std::printf("sgda final mean |z|^2 = %.6g\n", table.sgda_mean_sq_norm.back());
      std::printf("seg  final mean |z - z*| = %.6g\n", table.seg_mean_dist.back());
      for (const auto& f : table.emitted_files) std::printf("wrote %s\n", f.c_str());
      return 0;
    }
    if (cmd_presets->parsed()) {
      for (const auto& name : extragrad::preset_names()) {
        const extragrad::ProblemPreset preset = extragrad::make_preset(name);
        std::printf("%-14s %s\n", name.c_str(), preset.description.c_str());
        std::printf("               default algorithm=%s run eta_k=%g k^-%g, "
                    "distribution-check eta_k=%g k^-%g\n",
                    to_string(preset.default_algorithm).c_str(), preset.run_schedule.eta0,
                    preset.run_schedule.exponent_a, preset.clt_schedule.eta0,
                    preset.clt_schedule.exponent_a);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
