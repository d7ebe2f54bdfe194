#include "extragrad/optimizers.hpp"

#include <algorithm>
#include <cmath>

namespace extragrad {

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "sgda") return Algorithm::kSgda;
  if (name == "seg") return Algorithm::kSeg;
  if (name == "tseg") return Algorithm::kTseg;
  throw std::invalid_argument("unknown algorithm '" + name + "' (expected sgda|seg|tseg)");
}

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kSgda: return "sgda";
    case Algorithm::kSeg: return "seg";
    case Algorithm::kTseg: return "tseg";
  }
  return "?";
}

namespace {

void require_finite(const Eigen::VectorXd& v, const char* what, long iteration) {
  if (!v.allFinite()) throw RunFailure(std::string("non-finite ") + what, iteration);
}

}  // namespace

DecisionPoint sgda_step(const DecisionPoint& z, const KernelState& w_next, double eta,
                        const SaddleProblem& problem) {
  if (!(eta > 0.0)) throw std::invalid_argument("sgda_step: eta must be positive");
  return z.with_stacked(z.stacked() - eta * problem.stochastic_oracle(z, w_next));
}

std::pair<DecisionPoint, DecisionPoint> seg_step(const DecisionPoint& z, const KernelState& w_next,
                                                 double eta, const SaddleProblem& problem) {
  if (!(eta > 0.0)) throw std::invalid_argument("seg_step: eta must be positive");
  const DecisionPoint half =
      z.with_stacked(z.stacked() - eta * problem.stochastic_oracle(z, w_next));
  const DecisionPoint next =
      z.with_stacked(z.stacked() - eta * problem.stochastic_oracle(half, w_next));
  return {half, next};
}

TsegStepResult tseg_step(const DecisionPoint& z, const KernelState& w, double eta, double d_k,
                         const TruncationState& trunc, const TruncationPolicy& policy,
                         const SaddleProblem& problem, long iteration) {
  if (!(d_k > 0.0)) throw std::invalid_argument("tseg_step: d_k must be positive");
  const DecisionPoint candidate = seg_step(z, w, eta, problem).second;
  const double move = (candidate.stacked() - z.stacked()).norm();
  const bool outside = candidate.stacked().norm() >= policy.radius(trunc.kappa);
  TsegStepResult result;
  if (move >= d_k || outside) {
    result.next_z = trunc.anchor_z;
    result.next_w = trunc.anchor_w;
    result.next_trunc = trunc;
    result.next_trunc.kappa += 1;
    result.next_trunc.reinit_log.push_back(iteration);
    result.fired = true;
  } else {
    result.next_z = candidate;
    result.next_w = w;
    result.next_trunc = trunc;
    result.fired = false;
  }
  return result;
}

RunRecord run(Algorithm algorithm, const SaddleProblem& problem, NoiseKernel kernel,
              const StepSchedule& schedule, const std::optional<TruncationPolicy>& policy,
              const DecisionPoint& z0, const RunOptions& options) {
  if (options.n_steps < 1) throw std::invalid_argument("run: n_steps must be >= 1");
  if ((algorithm == Algorithm::kTseg) != policy.has_value()) {
    throw std::invalid_argument("run: a truncation policy is required exactly for tseg");
  }
  if (policy) policy->validate();
  schedule.validate();

  const bool trace_distance =
      options.trace_every > 0 && (options.z_star.has_value() || problem.saddle.has_value());
  const Eigen::VectorXd* z_star_vec = nullptr;
  if (options.z_star) {
    z_star_vec = &options.z_star->stacked();
  } else if (problem.saddle) {
    z_star_vec = &problem.saddle->stacked();
  }
  const bool trace_subopt =
      options.trace_every > 0 && problem.has_objective() && problem.saddle.has_value();

  DecisionPoint z = z0;
  DecisionPoint mean = z0.with_stacked(Eigen::VectorXd::Zero(z0.dim()));
  long mean_count = 0;
  TruncationState trunc;
  bool anchored = false;

  RunRecord record;
  std::size_t next_checkpoint = 0;
  std::vector<long> checkpoints = options.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());

  for (long k = 1; k <= options.n_steps; ++k) {
    const double eta = step_size(schedule, k);
    kernel.state = kernel.advance(kernel.state, z);
    require_finite(kernel.state.w, "kernel sample", k);

    switch (algorithm) {
      case Algorithm::kSgda:
        z = sgda_step(z, kernel.state, eta, problem);
        break;
      case Algorithm::kSeg:
        z = seg_step(z, kernel.state, eta, problem).second;
        break;
      case Algorithm::kTseg: {
        const double d_k = policy->threshold(eta);
        if (!anchored) {
          // First step defines the anchor pair (z_1, w_1). A violating first
          // candidate is kept (the restore target is itself) but still bumps
          // the counter, growing the truncation set.
          z = seg_step(z, kernel.state, eta, problem).second;
          trunc.anchor_z = z;
          trunc.anchor_w = kernel.state;
          anchored = true;
          const double move = (z.stacked() - z0.stacked()).norm();
          if (move >= d_k || z.stacked().norm() >= policy->radius(trunc.kappa)) {
            trunc.kappa += 1;
            trunc.reinit_log.push_back(k);
          }
        } else {
          TsegStepResult step = tseg_step(z, kernel.state, eta, d_k, trunc, *policy, problem, k);
          z = std::move(step.next_z);
          kernel.state = std::move(step.next_w);
          trunc = std::move(step.next_trunc);
          if (step.fired && options.restart_average_on_truncation) mean_count = 0;
        }
        if (trunc.kappa > options.truncation_cap) throw RunFailure("truncation overflow", k);
        break;
      }
    }
    require_finite(z.stacked(), "iterate", k);

    ++mean_count;
    mean = running_average(mean, z, mean_count);

    if (options.trace_every > 0 && k % options.trace_every == 0) {
      if (trace_distance) {
        record.distance_trace.emplace_back(k, (z.stacked() - *z_star_vec).norm());
      }
      if (trace_subopt) {
        record.suboptimality_trace.emplace_back(k, suboptimality(problem, z));
      }
    }
    while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == k) {
      record.checkpoint_averages.emplace(k, mean);
      ++next_checkpoint;
    }
  }

  record.final_z = z;
  record.averaged_z = mean;
  record.n_steps = options.n_steps;
  record.truncation_count = trunc.kappa;
  record.last_truncation_step = trunc.reinit_log.empty() ? 0 : trunc.reinit_log.back();
  return record;
}

}  // namespace extragrad
