#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "extragrad/diagnostics.hpp"
#include "extragrad/models.hpp"
#include "extragrad/optimizers.hpp"

namespace extragrad {

/// Declarative description of one experiment. Zeroed schedule/truncation
/// fields mean "use the preset default". Canonical JSON serialization is
/// field-complete and key-sorted, so equal configs are byte-identical.
struct ExperimentConfig {
  std::string preset = "martingale-ev";
  std::string algorithm;        // empty => preset default
  double eta0 = 0.0;            // 0 => preset default
  double exponent_a = 0.0;      // 0 => preset default
  double trunc_radius0 = 5.0;
  double trunc_growth = 5.0;
  double trunc_epsilon = 0.0;   // 0 => paired with the schedule (1/a - 1)
  double trunc_d_const = 0.0;   // 0 => paired (d_k = k^(-1/2))
  long n_steps = 5000;
  int n_replications = 2000;
  std::uint64_t base_seed = 1;
  long trace_every = 10;  // trace of replication 0; 0 disables
  std::vector<long> checkpoints = {500, 5000};
  std::string output_dir;       // empty => no files
  std::vector<std::string> emit = {"csv", "json"};
  int threads = 0;              // 0 => hardware concurrency
  bool restart_average_on_truncation = false;
  long sigma_samples = 2000000;     // batch-means stream length (Markov noise)
  int sigma_batches = 2000;
  long iid_sigma_samples = 200000;  // draws for the i.i.d. noise covariance

  std::string canonical_json() const;
  static ExperimentConfig from_json_text(const std::string& text);
};

struct ReplicationSummary {
  int replication_id = 0;
  DecisionPoint averaged_z;
  DecisionPoint final_z;
  std::map<long, double> projection_stat;  // checkpoint -> sqrt(k) 1^T (z-bar_k - z*)
  long truncation_count = 0;
  long last_truncation_step = 0;
  double wall_time_s = 0.0;
  std::optional<std::string> failure;
};

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string algorithm;
  StepSchedule schedule;
  DecisionPoint z_star;
  std::vector<ReplicationSummary> summaries;  // one per replication, id order
  int n_failed = 0;
  std::vector<long> checkpoints;
  std::map<long, double> ks;        // checkpoint -> KS statistic
  double ks_critical = 0.0;         // 1% Kolmogorov critical value
  double sigma_projection = 0.0;    // sqrt(1^T V 1) from the theoretical covariance
  Eigen::MatrixXd q_star;           // finite-difference Jacobian at z*
  Eigen::MatrixXd sigma_noise;      // Sigma (i.i.d.) or Sigma_s (batch means)
  CovarianceReport covariance;      // at the final checkpoint
  bool stats_pass = false;          // KS at the final checkpoint below critical
  std::optional<RunRecord> trace_record;  // replication 0, when tracing is on
  std::vector<std::string> emitted_files;
};

/// Runs n_replications seeded runs, assembles projection statistics at every
/// checkpoint, estimates the theoretical covariance, and emits CSV/JSON/SVG
/// into config.output_dir. Reruns with the same config are byte-identical
/// regardless of the worker count. Uses the preset's run_schedule unless the
/// config sets one. Per-replication failures are collected; more than 5%
/// failed aborts with ExperimentError.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Same pipeline with the preset's distribution-check schedule as the default
/// (gentler decay, so the Gaussian limit is visible at the configured horizon).
/// stats_pass reflects the final-checkpoint KS test at the 1% level.
ExperimentResult clt_check(const ExperimentConfig& config);

struct DivergenceDemoParams {
  double eta = 0.1;          // constant step for the gradient-descent-ascent column
  long n_steps = 10000;
  int n_replications = 2000;
  std::uint64_t seed = 1;
  double seg_eta0 = 0.9;     // decaying-schedule column: eta0 * k^(-a)
  double seg_exponent = 0.51;
  int threads = 0;
  std::string output_dir;
  std::vector<std::string> emit;
};

struct DivergenceTable {
  std::vector<long> steps;
  std::vector<double> sgda_mean_sq_norm;
  std::vector<double> seg_mean_sq_norm;
  std::vector<double> seg_mean_dist;
  double one_step_prediction = 0.0;  // (1 + eta^2) |z0|^2 + 2 eta^2
  double sgda_step1_mean = 0.0;
  double sgda_step1_se = 0.0;
  std::vector<std::string> emitted_files;
};

/// Side-by-side SGDA (constant step) and SEG (decaying schedule) on the
/// decision-dependent scalar game from z0 = (1, 0), with the analytic
/// one-step second-moment prediction.
DivergenceTable divergence_demo(const DivergenceDemoParams& params);

}  // namespace extragrad
