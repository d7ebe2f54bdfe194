#include "extragrad/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>

#include "emit.hpp"

namespace extragrad {

using nlohmann::json;

namespace {

// Stream lanes, so replications and diagnostics never share uniforms.
constexpr std::uint64_t kLaneReplication = 1;
constexpr std::uint64_t kLaneSigma = 2;
constexpr std::uint64_t kLaneDemoSgda = 3;
constexpr std::uint64_t kLaneDemoSeg = 4;

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["algorithm"] = c.algorithm;
  j["eta0"] = c.eta0;
  j["exponent_a"] = c.exponent_a;
  j["trunc_radius0"] = c.trunc_radius0;
  j["trunc_growth"] = c.trunc_growth;
  j["trunc_epsilon"] = c.trunc_epsilon;
  j["trunc_d_const"] = c.trunc_d_const;
  j["n_steps"] = c.n_steps;
  j["n_replications"] = c.n_replications;
  j["base_seed"] = c.base_seed;
  j["trace_every"] = c.trace_every;
  j["checkpoints"] = c.checkpoints;
  j["output_dir"] = c.output_dir;
  j["emit"] = c.emit;
  j["threads"] = c.threads;
  j["restart_average_on_truncation"] = c.restart_average_on_truncation;
  j["sigma_samples"] = c.sigma_samples;
  j["sigma_batches"] = c.sigma_batches;
  j["iid_sigma_samples"] = c.iid_sigma_samples;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  j.at("preset").get_to(c.preset);
  j.at("algorithm").get_to(c.algorithm);
  j.at("eta0").get_to(c.eta0);
  j.at("exponent_a").get_to(c.exponent_a);
  j.at("trunc_radius0").get_to(c.trunc_radius0);
  j.at("trunc_growth").get_to(c.trunc_growth);
  j.at("trunc_epsilon").get_to(c.trunc_epsilon);
  j.at("trunc_d_const").get_to(c.trunc_d_const);
  j.at("n_steps").get_to(c.n_steps);
  j.at("n_replications").get_to(c.n_replications);
  j.at("base_seed").get_to(c.base_seed);
  j.at("trace_every").get_to(c.trace_every);
  j.at("checkpoints").get_to(c.checkpoints);
  j.at("output_dir").get_to(c.output_dir);
  j.at("emit").get_to(c.emit);
  j.at("threads").get_to(c.threads);
  j.at("restart_average_on_truncation").get_to(c.restart_average_on_truncation);
  j.at("sigma_samples").get_to(c.sigma_samples);
  j.at("sigma_batches").get_to(c.sigma_batches);
  j.at("iid_sigma_samples").get_to(c.iid_sigma_samples);
  return c;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Dynamic scheduling over fixed-size index blocks: work attribution does not
/// depend on the thread count, so results merge identically for any pool size.
void parallel_blocks(long n_items, long block, int threads, const std::function<void(long, long)>& fn) {
  const long n_blocks = (n_items + block - 1) / block;
  std::atomic<long> next{0};
  auto worker = [&] {
    for (;;) {
      const long b = next.fetch_add(1);
      if (b >= n_blocks) return;
      fn(b * block, std::min(n_items, (b + 1) * block));
    }
  };
  if (threads <= 1 || n_blocks <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

struct Resolved {
  ProblemPreset preset;
  Algorithm algorithm;
  StepSchedule schedule;
  std::optional<TruncationPolicy> policy;
  std::vector<long> checkpoints;
};

Resolved resolve(const ExperimentConfig& config, bool clt_defaults) {
  Resolved r{resolve_preset(config.preset), Algorithm::kSeg, StepSchedule(), std::nullopt, {}};
  r.algorithm = config.algorithm.empty() ? r.preset.default_algorithm
                                         : algorithm_from_string(config.algorithm);
  const StepSchedule& fallback = clt_defaults ? r.preset.clt_schedule : r.preset.run_schedule;
  r.schedule = StepSchedule(config.eta0 > 0.0 ? config.eta0 : fallback.eta0,
                            config.exponent_a > 0.0 ? config.exponent_a : fallback.exponent_a);
  if (r.algorithm == Algorithm::kTseg) {
    TruncationPolicy policy;
    policy.radius0 = config.trunc_radius0;
    policy.radius_growth = config.trunc_growth;
    policy.epsilon = config.trunc_epsilon > 0.0 ? config.trunc_epsilon
                                                : 1.0 / r.schedule.exponent_a - 1.0;
    // Unless given, the threshold scale pairs with the final epsilon so that
    // d_k = eta0^((1+eps)/2) k^(-a(1+eps)/2) becomes k^(-1/2) at the paired a.
    policy.d_const = config.trunc_d_const > 0.0
                         ? config.trunc_d_const
                         : std::pow(r.schedule.eta0, -0.5 * (1.0 + policy.epsilon));
    policy.validate();
    r.policy = policy;
  }
  r.checkpoints = config.checkpoints;
  r.checkpoints.push_back(config.n_steps);
  std::sort(r.checkpoints.begin(), r.checkpoints.end());
  r.checkpoints.erase(std::unique(r.checkpoints.begin(), r.checkpoints.end()), r.checkpoints.end());
  std::erase_if(r.checkpoints, [&](long c) { return c < 1 || c > config.n_steps; });
  return r;
}

ExperimentResult run_pipeline(const ExperimentConfig& config, bool clt_defaults) {
  if (config.n_replications < 1) throw ExperimentError("need at least one replication");
  if (config.n_steps < 1) throw ExperimentError("need at least one step");
  Resolved res = resolve(config, clt_defaults);
  const SaddleProblem& problem = res.preset.problem;
  if (!problem.saddle) throw ExperimentError("saddle unknown for preset " + config.preset);
  const DecisionPoint z_star = *problem.saddle;
  const Eigen::VectorXd z_star_vec = z_star.stacked();
  const DecisionPoint z0 = res.preset.initial_z;

  ExperimentResult result;
  result.config = config;
  result.algorithm = to_string(res.algorithm);
  result.schedule = res.schedule;
  result.z_star = z_star;
  result.checkpoints = res.checkpoints;
  result.summaries.resize(config.n_replications);

  const int threads = resolve_threads(config.threads);
  parallel_blocks(config.n_replications, 16, threads, [&](long lo, long hi) {
    for (long r = lo; r < hi; ++r) {
      ReplicationSummary& summary = result.summaries[r];
      summary.replication_id = static_cast<int>(r);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        NoiseKernel kernel =
            res.preset.make_kernel(z0, RngStream::derive(config.base_seed, kLaneReplication, r));
        RunOptions options;
        options.n_steps = config.n_steps;
        options.checkpoints = res.checkpoints;
        options.trace_every = (r == 0) ? config.trace_every : 0;
        options.restart_average_on_truncation = config.restart_average_on_truncation;
        options.z_star = z_star;
        RunRecord record = run(res.algorithm, problem, std::move(kernel), res.schedule, res.policy,
                               z0, options);
        summary.averaged_z = record.averaged_z;
        summary.final_z = record.final_z;
        summary.truncation_count = record.truncation_count;
        summary.last_truncation_step = record.last_truncation_step;
        for (const auto& [step, avg] : record.checkpoint_averages) {
          const double proj = (avg.stacked() - z_star_vec).sum();
          summary.projection_stat[step] = std::sqrt(static_cast<double>(step)) * proj;
        }
        if (r == 0 && config.trace_every > 0) result.trace_record = std::move(record);
      } catch (const std::exception& e) {
        summary.failure = e.what();
      }
      summary.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  });

  result.n_failed = static_cast<int>(std::count_if(
      result.summaries.begin(), result.summaries.end(),
      [](const ReplicationSummary& s) { return s.failure.has_value(); }));
  if (result.n_failed * 20 > config.n_replications) {
    std::string first;
    for (const auto& s : result.summaries) {
      if (s.failure) {
        first = *s.failure;
        break;
      }
    }
    throw ExperimentError("more than 5% of replications failed (" +
                          std::to_string(result.n_failed) + "/" +
                          std::to_string(config.n_replications) + "; first: " + first + ")");
  }

  // Theoretical covariance: finite-difference Jacobian at z*, noise covariance
  // from the kernel (marginal for i.i.d. noise, long-run for Markov noise).
  result.q_star = jacobian_fd(problem.mean_field, z_star);
  NoiseKernel sigma_kernel =
      res.preset.make_kernel(z_star, RngStream::derive(config.base_seed, kLaneSigma, 0));
  if (res.preset.noise_model == NoiseModel::kIid) {
    result.sigma_noise = gradient_noise_covariance_iid(problem, z_star, std::move(sigma_kernel),
                                                       config.iid_sigma_samples);
  } else {
    result.sigma_noise = longrun_covariance_batch_means(
        problem, z_star, std::move(sigma_kernel), config.sigma_samples, config.sigma_batches);
  }
  const Eigen::MatrixXd theoretical = asymptotic_covariance(result.q_star, result.sigma_noise);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(theoretical.rows());
  result.sigma_projection = std::sqrt(ones.dot(theoretical * ones));

  // Empirical distribution of the projection statistic per checkpoint.
  std::size_t ok = result.summaries.size() - result.n_failed;
  if (ok >= 2) {
    const long final_step = res.checkpoints.back();
    Eigen::MatrixXd final_samples(ok, z_star.dim());
    std::size_t row = 0;
    for (const auto& s : result.summaries) {
      if (s.failure) continue;
      final_samples.row(row++) =
          std::sqrt(static_cast<double>(final_step)) *
          (s.averaged_z.stacked() - z_star_vec).transpose();
    }
    result.covariance = make_covariance_report(final_samples, theoretical);
    for (long step : res.checkpoints) {
      std::vector<double> proj;
      proj.reserve(ok);
      for (const auto& s : result.summaries) {
        if (s.failure) continue;
        proj.push_back(s.projection_stat.at(step));
      }
      result.ks[step] = ks_statistic(proj, result.sigma_projection);
    }
    result.ks_critical = ks_critical_1pct(ok);
    result.stats_pass = result.ks.at(final_step) < result.ks_critical;
  }

  detail::emit_experiment_files(result);
  return result;
}

}  // namespace

std::string ExperimentConfig::canonical_json() const { return config_to_json(*this).dump(2) + "\n"; }

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  return config_from_json(json::parse(text));
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_pipeline(config, /*clt_defaults=*/false);
}

ExperimentResult clt_check(const ExperimentConfig& config) {
  return run_pipeline(config, /*clt_defaults=*/true);
}

DivergenceTable divergence_demo(const DivergenceDemoParams& params) {
  if (!(params.eta > 0.0 && params.eta < 1.0)) {
    throw std::invalid_argument("divergence_demo: eta must lie in (0, 1)");
  }
  if (params.n_steps < 1 || params.n_replications < 1) {
    throw std::invalid_argument("divergence_demo: need at least one step and one replication");
  }
  const SaddleProblem problem = make_remark3_problem();
  const DecisionPoint z0(Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Zero(1));
  const StepSchedule seg_schedule(params.seg_eta0, params.seg_exponent);

  const long n = params.n_steps;
  const int reps = params.n_replications;
  const long block = 64;
  const long n_blocks = (reps + block - 1) / block;

  // Per-block partial sums keep the reduction independent of the pool size.
  std::vector<std::vector<double>> sgda_sq(n_blocks), seg_sq(n_blocks), seg_dist(n_blocks);
  std::vector<double> step1_sum(n_blocks, 0.0), step1_sumsq(n_blocks, 0.0);

  parallel_blocks(reps, block, resolve_threads(params.threads), [&](long lo, long hi) {
    const long b = lo / block;
    sgda_sq[b].assign(n, 0.0);
    seg_sq[b].assign(n, 0.0);
    seg_dist[b].assign(n, 0.0);
    for (long r = lo; r < hi; ++r) {
      NoiseKernel sgda_kernel = make_remark3_kernel(RngStream::derive(params.seed, kLaneDemoSgda, r));
      NoiseKernel seg_kernel = make_remark3_kernel(RngStream::derive(params.seed, kLaneDemoSeg, r));
      DecisionPoint z_sgda = z0;
      DecisionPoint z_seg = z0;
      for (long k = 1; k <= n; ++k) {
        sgda_kernel.state = sgda_kernel.advance(sgda_kernel.state, z_sgda);
        z_sgda = sgda_step(z_sgda, sgda_kernel.state, params.eta, problem);
        seg_kernel.state = seg_kernel.advance(seg_kernel.state, z_seg);
        z_seg = seg_step(z_seg, seg_kernel.state, step_size(seg_schedule, k), problem).second;
        const double sq = z_sgda.stacked().squaredNorm();
        sgda_sq[b][k - 1] += sq;
        seg_sq[b][k - 1] += z_seg.stacked().squaredNorm();
        seg_dist[b][k - 1] += z_seg.stacked().norm();
        if (k == 1) {
          step1_sum[b] += sq;
          step1_sumsq[b] += sq * sq;
        }
      }
    }
  });

  DivergenceTable table;
  table.steps.resize(n);
  table.sgda_mean_sq_norm.assign(n, 0.0);
  table.seg_mean_sq_norm.assign(n, 0.0);
  table.seg_mean_dist.assign(n, 0.0);
  for (long k = 0; k < n; ++k) table.steps[k] = k + 1;
  for (long b = 0; b < n_blocks; ++b) {
    for (long k = 0; k < n; ++k) {
      table.sgda_mean_sq_norm[k] += sgda_sq[b][k];
      table.seg_mean_sq_norm[k] += seg_sq[b][k];
      table.seg_mean_dist[k] += seg_dist[b][k];
    }
  }
  const double m = static_cast<double>(reps);
  for (long k = 0; k < n; ++k) {
    table.sgda_mean_sq_norm[k] /= m;
    table.seg_mean_sq_norm[k] /= m;
    table.seg_mean_dist[k] /= m;
  }
  double s1 = 0.0, s2 = 0.0;
  for (long b = 0; b < n_blocks; ++b) {
    s1 += step1_sum[b];
    s2 += step1_sumsq[b];
  }
  table.sgda_step1_mean = s1 / m;
  const double var = std::max(0.0, s2 / m - table.sgda_step1_mean * table.sgda_step1_mean);
  table.sgda_step1_se = std::sqrt(var / m);
  table.one_step_prediction =
      (1.0 + params.eta * params.eta) * z0.stacked().squaredNorm() + 2.0 * params.eta * params.eta;

  detail::emit_divergence_files(params, table);
  return table;
}

}  // namespace extragrad
