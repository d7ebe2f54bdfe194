#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "extragrad/kernels.hpp"
#include "extragrad/types.hpp"

namespace extragrad {

enum class Algorithm { kSgda, kSeg, kTseg };

Algorithm algorithm_from_string(const std::string& name);
std::string to_string(Algorithm algorithm);

/// Growing truncation sets and shrinking step-change thresholds. K_q is the
/// origin-centered ball of radius radius0 + q * radius_growth, so the sets are
/// strictly nested and cover the whole space. The threshold schedule is
/// d_k = d_const * eta_k^((1+epsilon)/2).
struct TruncationPolicy {
  double radius0 = 5.0;
  double radius_growth = 5.0;
  double d_const = 1.0;
  double epsilon = 0.25;

  void validate() const {
    if (!(radius0 > 0) || !(radius_growth > 0) || !(d_const > 0)) {
      throw std::invalid_argument("TruncationPolicy: radii and d_const must be positive");
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
      throw std::invalid_argument("TruncationPolicy: epsilon must lie in (0, 1)");
    }
  }

  double radius(long kappa) const { return radius0 + static_cast<double>(kappa) * radius_growth; }
  double threshold(double eta_k) const { return d_const * std::pow(eta_k, 0.5 * (1.0 + epsilon)); }
};

/// TSEG bookkeeping: the truncation counter, the stored reinitialization
/// anchor (z_1, w_1), and the iterations at which truncation fired.
struct TruncationState {
  long kappa = 0;
  DecisionPoint anchor_z;
  KernelState anchor_w;
  std::vector<long> reinit_log;
};

/// Thrown when a run cannot continue; carries the offending iteration.
class RunFailure : public std::runtime_error {
 public:
  RunFailure(const std::string& what, long iteration)
      : std::runtime_error(what + " at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

struct RunRecord {
  DecisionPoint final_z;
  DecisionPoint averaged_z;   // mean of the full iterates z_1..z_n
  long n_steps = 0;
  long truncation_count = 0;  // 0 for SGDA/SEG
  long last_truncation_step = 0;
  std::vector<std::pair<long, double>> distance_trace;       // (step, |z_k - z*|)
  std::vector<std::pair<long, double>> suboptimality_trace;  // (step, G(z_k))
  std::map<long, DecisionPoint> checkpoint_averages;         // z-bar at requested steps
};

struct RunOptions {
  long n_steps = 0;
  long trace_every = 0;                 // 0 disables traces
  std::vector<long> checkpoints;        // steps at which the running mean is snapshotted
  long truncation_cap = 10000;
  bool restart_average_on_truncation = false;
  std::optional<DecisionPoint> z_star;  // for distance traces when the problem has no saddle
};

/// z - eta * H(z, w_next).
DecisionPoint sgda_step(const DecisionPoint& z, const KernelState& w_next, double eta,
                        const SaddleProblem& problem);

/// Extrapolate then update, both with the same data sample:
/// half = z - eta * H(z, w), next = z - eta * H(half, w).
std::pair<DecisionPoint, DecisionPoint> seg_step(const DecisionPoint& z, const KernelState& w_next,
                                                 double eta, const SaddleProblem& problem);

struct TsegStepResult {
  DecisionPoint next_z;
  KernelState next_w;
  TruncationState next_trunc;
  bool fired = false;
};

/// One truncated SEG step: takes the SEG candidate; if the move is at least
/// d_k or the candidate leaves the current truncation set, restores the
/// anchor pair and increments the counter.
TsegStepResult tseg_step(const DecisionPoint& z, const KernelState& w, double eta, double d_k,
                         const TruncationState& trunc, const TruncationPolicy& policy,
                         const SaddleProblem& problem, long iteration);

/// Runs n_steps iterations from z0, sampling w_{k+1} from the kernel driven by
/// z_k before every step, and accumulates the running average of the full
/// iterates (half-step iterates are never averaged).
RunRecord run(Algorithm algorithm, const SaddleProblem& problem, NoiseKernel kernel,
              const StepSchedule& schedule, const std::optional<TruncationPolicy>& policy,
              const DecisionPoint& z0, const RunOptions& options);

}  // namespace extragrad
